// cli.hpp - scenario configs: parsing, validation and batch execution.
#pragma once

#include <chrono>
#include <filesystem>
#include <limits>
#include <map>

#include "io.hpp"

namespace qprep::cli {

struct Caps {
    long long max_chain_dim = kDefaultChainCap;
    double unitary = 1e-10;
    double stationarity = 1e-9;
    double kernel = 1e-9;
};

struct TaskPlan {
    std::size_t index = 0;
    std::string type;
    std::string pointer;
    json spec;
    int n_max = 0;
    // ac-profile
    int random_operators = 10;
    bool certify = true;
    // d1
    int direct_max = 3;
    // synth / protocol
    std::string method;
    std::optional<DensityState> target;
    DensityState input;
    std::string reverse_route = "constant";
    DensityState reverse_input;
    Vector via;
    std::optional<DensityState> prepare_input;
    int prepare_steps = 0;
    int panel_mixed = 5, panel_pure = 4;
    int emit_max_slots = 6;
    int stride = 1;
    // sweep
    std::vector<int> grid_N;
    std::vector<double> grid_lambda, grid_omega;
};

struct Scenario {
    ModelSpec model;
    std::optional<double> omega0_T;  // micromaser preset form only
    std::vector<TaskPlan> tasks;
    std::uint64_t seed = 0;
    Caps caps;
    json raw;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(path + "/" + it.key(), "unknown field");
    }
}

inline int positive_int(const json& j, const std::string& path, int lo = 1) {
    const int v = int_from_json(j, path);
    if (v < lo) throw ConfigError(path, "must be >= " + std::to_string(lo));
    return v;
}

inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline DensityState system_target(const json& j, const Scenario& sc, const std::map<std::string, DensityState>& named,
                                  const std::string& path) {
    const int N = sc.model.model.N();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "phi") return sc.model.model.phi;
        if (s == "maximally_mixed") return DensityState::maximally_mixed(FactorDims{N});
        auto it = named.find(s);
        if (it == named.end()) throw ConfigError(path, "undeclared target '" + s + "'");
        return it->second;
    }
    return state_from_json(j, N, path);
}

inline Vector pure_vector(const DensityState& s, const std::string& path) {
    if (support_rank(s.matrix, 1e-10) != 1) throw ConfigError(path, "expected a vector state");
    auto es = hermitian_eigen(s.matrix);
    return es.eigenvectors().col(es.eigenvalues().size() - 1);
}

inline void parse_panel(const json& t, TaskPlan& p, const std::string& path) {
    if (!t.contains("panel")) return;
    check_keys(t["panel"], {"mixed", "pure"}, path + "/panel");
    if (t["panel"].contains("mixed")) p.panel_mixed = positive_int(t["panel"]["mixed"], path + "/panel/mixed", 0);
    if (t["panel"].contains("pure")) p.panel_pure = positive_int(t["panel"]["pure"], path + "/panel/pure", 0);
}

inline TaskPlan parse_task(const json& t, std::size_t idx, const Scenario& sc,
                           const std::map<std::string, DensityState>& named) {
    const std::string path = "/tasks/" + std::to_string(idx);
    TaskPlan p;
    p.index = idx;
    p.pointer = path;
    p.spec = t;
    const json& ty = member(t, "type", path);
    if (!ty.is_string()) throw ConfigError(path + "/type", "expected a string");
    p.type = ty.get<std::string>();
    const auto& m = sc.model.model;
    auto opt_int = [&](const char* key, int def, int lo) {
        return t.contains(key) ? positive_int(t[key], path + "/" + key, lo) : def;
    };
    if (p.type == "stationary" || p.type == "certify-ac") {
        check_keys(t, {"type"}, path);
    } else if (p.type == "d1") {
        check_keys(t, {"type", "n_max", "direct_max"}, path);
        p.n_max = opt_int("n_max", 4, 0);
        p.direct_max = opt_int("direct_max", 3, 0);
    } else if (p.type == "observability") {
        check_keys(t, {"type", "n_max"}, path);
        p.n_max = positive_int(member(t, "n_max", path), path + "/n_max");
    } else if (p.type == "ac-profile") {
        check_keys(t, {"type", "n_max", "random_operators", "certify"}, path);
        p.n_max = opt_int("n_max", 200, 1);
        p.random_operators = opt_int("random_operators", 10, 0);
        if (t.contains("certify")) {
            if (!t["certify"].is_boolean()) throw ConfigError(path + "/certify", "expected a boolean");
            p.certify = t["certify"].get<bool>();
        }
    } else if (p.type == "synth") {
        check_keys(t, {"type", "target", "method", "n_max", "reverse", "panel", "emit_max_slots"}, path);
        p.n_max = opt_int("n_max", 8, 1);
        p.target = system_target(member(t, "target", path), sc, named, path + "/target");
        if (t.contains("method") && !t["method"].is_string()) throw ConfigError(path + "/method", "expected a string");
        p.method = t.contains("method") ? t["method"].get<std::string>() : "mixed";
        if (p.method == "forward") {
            pure_vector(*p.target, path + "/target");
        } else if (p.method == "reverse") {
            p.via = Vector::Zero(m.N());
            p.via(0) = 1.0;
            {
                const std::string rp = path + "/reverse";
                const json& r = member(t, "reverse", path);
                check_keys(r, {"route", "via", "input", "prepare"}, rp);
                if (r.contains("prepare")) {
                    const json& pr = r["prepare"];
                    check_keys(pr, {"input", "n"}, rp + "/prepare");
                    p.prepare_input = state_from_json(member(pr, "input", rp + "/prepare"), m.d(), rp + "/prepare/input");
                    p.prepare_steps = positive_int(member(pr, "n", rp + "/prepare"), rp + "/prepare/n");
                }
                if (r.contains("route")) {
                    p.reverse_route = r["route"].is_string() ? r["route"].get<std::string>() : "";
                    if (p.reverse_route != "constant" && p.reverse_route != "forward")
                        throw ConfigError(rp + "/route", "expected \"constant\" or \"forward\"");
                }
                if (r.contains("via")) p.via = pure_vector(system_target(r["via"], sc, named, rp + "/via"), rp + "/via");
                if (p.reverse_route == "constant")
                    p.reverse_input = state_from_json(member(r, "input", rp), m.d(), rp + "/input");
                else if (r.contains("input"))
                    throw ConfigError(rp + "/input", "only the constant route takes an input");
            }
        } else if (p.method != "mixed") {
            throw ConfigError(path + "/method", "expected \"forward\", \"mixed\" or \"reverse\"");
        }
        parse_panel(t, p, path);
        p.emit_max_slots = opt_int("emit_max_slots", 6, 0);
    } else if (p.type == "protocol") {
        check_keys(t, {"type", "input", "n_max", "target", "panel", "stride"}, path);
        p.n_max = positive_int(member(t, "n_max", path), path + "/n_max");
        p.input = state_from_json(member(t, "input", path), m.d(), path + "/input");
        if (t.contains("target")) p.target = system_target(t["target"], sc, named, path + "/target");
        p.stride = opt_int("stride", 1, 1);
        parse_panel(t, p, path);
    } else if (p.type == "sweep") {
        check_keys(t, {"type", "grid"}, path);
        if (!sc.model.micromaser) throw ConfigError(path, "sweep needs a micromaser model");
        const std::string gp = path + "/grid";
        const json& g = member(t, "grid", path);
        check_keys(g, {"N", "lambda", "omega0_T"}, gp);
        const auto& mm = *sc.model.micromaser;
        auto list = [&](const char* key) -> const json& {
            const json& a = g[key];
            if (!a.is_array() || a.empty()) throw ConfigError(gp + "/" + key, "expected a non-empty array");
            return a;
        };
        if (g.contains("N") || g.contains("omega0_T")) {
            if (!sc.omega0_T) throw ConfigError(gp, "N and omega0_T grids need the omega0_T micromaser form");
        }
        if (g.contains("N")) {
            const json& a = list("N");
            for (std::size_t k = 0; k < a.size(); ++k) p.grid_N.push_back(positive_int(a[k], gp + "/N/" + std::to_string(k), 2));
        } else {
            p.grid_N = {mm.N};
        }
        if (g.contains("lambda")) {
            const json& a = list("lambda");
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double l = number_from_json(a[k], gp + "/lambda/" + std::to_string(k));
                if (!(l >= 0.0 && l < 0.5)) throw ConfigError(gp + "/lambda/" + std::to_string(k), "lambda must lie in [0, 1/2)");
                p.grid_lambda.push_back(l);
            }
        } else {
            p.grid_lambda = {mm.lambda};
        }
        if (g.contains("omega0_T")) {
            const json& a = list("omega0_T");
            for (std::size_t k = 0; k < a.size(); ++k)
                p.grid_omega.push_back(angle_from_json(a[k], gp + "/omega0_T/" + std::to_string(k)));
        } else if (sc.omega0_T) {
            p.grid_omega = {*sc.omega0_T};
        }
    } else {
        throw ConfigError(path + "/type", "unknown task type '" + p.type +
                                              "' (stationary, certify-ac, d1, observability, ac-profile, synth, "
                                              "protocol, sweep)");
    }
    return p;
}

}  // namespace detail

inline Scenario parse_scenario(const json& cfg, std::optional<std::uint64_t> seed_override = std::nullopt) {
    detail::check_keys(cfg, {"model", "tasks", "seed", "caps", "targets"}, "");
    Scenario sc;
    sc.raw = cfg;
    if (cfg.contains("seed")) {
        if (!cfg["seed"].is_number_unsigned() && !cfg["seed"].is_number_integer())
            throw ConfigError("/seed", "expected a non-negative integer");
        if (cfg["seed"].is_number_integer() && cfg["seed"].get<long long>() < 0)
            throw ConfigError("/seed", "expected a non-negative integer");
        sc.seed = cfg["seed"].get<std::uint64_t>();
    }
    if (seed_override) sc.seed = *seed_override;
    if (cfg.contains("caps")) {
        const json& c = cfg["caps"];
        detail::check_keys(c, {"max_chain_dim", "tolerances"}, "/caps");
        if (c.contains("max_chain_dim")) {
            if (!c["max_chain_dim"].is_number_integer() || c["max_chain_dim"].get<long long>() < 1)
                throw ConfigError("/caps/max_chain_dim", "expected a positive integer");
            sc.caps.max_chain_dim = c["max_chain_dim"].get<long long>();
        }
        if (c.contains("tolerances")) {
            const json& t = c["tolerances"];
            detail::check_keys(t, {"unitary", "stationarity", "kernel"}, "/caps/tolerances");
            auto tol = [&](const char* key, double& dst) {
                if (!t.contains(key)) return;
                dst = number_from_json(t[key], std::string("/caps/tolerances/") + key);
                if (!(dst > 0.0)) throw ConfigError(std::string("/caps/tolerances/") + key, "must be positive");
            };
            tol("unitary", sc.caps.unitary);
            tol("stationarity", sc.caps.stationarity);
            tol("kernel", sc.caps.kernel);
        }
    }
    sc.model = model_from_json(member(cfg, "model", ""), "/model", sc.caps.unitary);
    if (cfg.contains("caps") && cfg["caps"].contains("max_chain_dim"))
        sc.model.model.max_chain_dim = sc.caps.max_chain_dim;
    else
        sc.caps.max_chain_dim = sc.model.model.max_chain_dim;
    if (sc.model.micromaser && cfg["model"].contains("omega0_T"))
        sc.omega0_T = angle_from_json(cfg["model"]["omega0_T"], "/model/omega0_T");

    std::map<std::string, DensityState> named;
    if (cfg.contains("targets")) {
        const json& t = cfg["targets"];
        if (!t.is_object()) throw ConfigError("/targets", "expected an object of named states");
        for (auto it = t.begin(); it != t.end(); ++it)
            named.emplace(it.key(), state_from_json(it.value(), sc.model.model.N(), "/targets/" + it.key()));
    }
    const json& tasks = member(cfg, "tasks", "");
    if (!tasks.is_array()) throw ConfigError("/tasks", "expected an array");
    for (std::size_t k = 0; k < tasks.size(); ++k) sc.tasks.push_back(detail::parse_task(tasks[k], k, sc, named));
    return sc;
}

inline json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("", "cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("JSON parse error: ") + e.what());
    }
}

inline std::string config_hash(const Scenario& sc) {
    return hex64(fnv1a(sc.raw.dump() + "#seed=" + std::to_string(sc.seed)));
}

// Chain slots a task needs as one dense space, if any.
inline std::optional<int> dense_slots(const TaskPlan& t) {
    if (t.type == "synth" || t.type == "observability") return t.n_max;
    return std::nullopt;
}

// ---- validate -------------------------------------------------------------------

struct Diagnostic {
    std::string severity;  // error | warning
    std::string pointer;
    std::string message;
};

struct Validation {
    std::vector<Diagnostic> diagnostics;
    json derived;
    bool ok() const {
        for (const auto& d : diagnostics)
            if (d.severity == "error") return false;
        return true;
    }
    int exit_code() const { return ok() ? 0 : 2; }
    std::string text() const {
        std::ostringstream os;
        for (const auto& d : diagnostics)
            os << d.severity << " " << (d.pointer.empty() ? "/" : d.pointer) << ": " << d.message << "\n";
        if (ok()) {
            os << "ok";
            if (!derived.is_null()) {
                os << " N=" << derived["N"] << " d=" << derived["d"] << " gns_dim=" << derived["gns_dim"]
                   << " joint_dim=" << derived["joint_dim"];
            }
            os << "\n";
            if (derived.contains("tasks"))
                for (const auto& t : derived["tasks"]) {
                    os << "  " << t["pointer"].get<std::string>() << " " << t["type"].get<std::string>();
                    if (t.contains("chain_dim")) os << " chain_dim=" << t["chain_dim"];
                    os << "\n";
                }
        }
        return os.str();
    }
};

inline Validation validate(const json& cfg) {
    Validation v;
    Scenario sc;
    try {
        sc = parse_scenario(cfg);
    } catch (const ConfigError& e) {
        v.diagnostics.push_back({"error", e.pointer, e.message});
        return v;
    } catch (const std::exception& e) {
        v.diagnostics.push_back({"error", "/model", e.what()});
        return v;
    }
    const auto& m = sc.model.model;
    v.derived = json{{"N", m.N()}, {"d", m.d()}, {"gns_dim", m.N() * m.N()}, {"joint_dim", m.N() * m.d()},
                     {"max_chain_dim", sc.caps.max_chain_dim}, {"model", sc.model.description}};
    if (!m.phi_faithful())
        v.diagnostics.push_back({"warning", "/model/phi", "reference state is not faithful; GNS tasks will fail"});
    json tasks = json::array();
    for (const auto& t : sc.tasks) {
        json d{{"pointer", t.pointer}, {"type", t.type}};
        if (auto slots = dense_slots(t)) {
            const long long dim = m.chain_dim(*slots);
            d["chain_dim"] = dim;
            if (dim > sc.caps.max_chain_dim)
                v.diagnostics.push_back({"warning", t.pointer + "/n_max",
                                         "chain dimension " + std::to_string(m.N()) + "*" + std::to_string(m.d()) + "^" +
                                             std::to_string(*slots) + " = " + std::to_string(dim) + " exceeds cap " +
                                             std::to_string(sc.caps.max_chain_dim)});
        }
        if (t.type == "sweep") d["points"] = t.grid_N.size() * t.grid_lambda.size() * std::max<std::size_t>(1, t.grid_omega.size());
        tasks.push_back(std::move(d));
    }
    v.derived["tasks"] = tasks;
    return v;
}

// ---- execute ----------------------------------------------------------------------

// Seed of task `index`; panels and random test operators draw from it.
inline std::uint64_t task_seed(std::uint64_t seed, std::size_t index) {
    return detail::mix(seed ^ detail::mix(index + 1));
}

struct TaskResult {
    json summary;  // deterministic content, also written as task JSON
    std::vector<std::pair<std::string, std::string>> files;
    std::string status = "ok";  // ok | failed | cap_exceeded
    std::string error;
    double seconds = 0.0;
};

struct RunResult {
    json report;
    int exit_code = 0;
    std::vector<TaskResult> tasks;
};

namespace detail {

inline std::string stem(const TaskPlan& t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "task%02zu_", t.index);
    return buf + t.type;
}

inline json trace_summary(const ConvergenceTrace& tr) {
    json rows = json::array();
    for (std::size_t k = 0; k < tr.n_values.size(); ++k)
        rows.push_back(json{{"n", tr.n_values[k]},
                            {"min_fidelity", tr.min_fidelity(k)},
                            {"max_trace_distance", tr.max_distance(k)},
                            {"spread", tr.spread(k)}});
    return rows;
}

inline json run_synth(const Scenario& sc, const TaskPlan& t, std::uint64_t seed, int threads, TaskResult& res) {
    const auto& m = sc.model.model;
    PreparingSequence seq;
    json extra = json::object();
    if (t.method == "forward") {
        const Vector xi = pure_vector(*t.target, t.pointer + "/target");
        seq = synth_forward(m, xi, t.n_max);
        extra["target_weight"] = (xi.adjoint() * m.phi.matrix * xi)(0).real();
    } else if (t.method == "mixed") {
        seq = synth_mixed(m, *t.target, t.n_max);
    } else {
        const auto rm = m.reversed();
        const PreparingSequence rev = t.reverse_route == "constant"
                                          ? constant_protocol(rm, t.reverse_input, t.n_max, DensityState::pure(t.via))
                                          : synth_forward(rm, t.via, t.n_max);
        seq = synth_reverse(m, *t.target, rev);
        extra["reverse_route"] = t.reverse_route;
        // error of the recovery stage started exactly at the via state
        const Matrix via = DensityState::pure(t.via).matrix;
        json rerr = json::array();
        for (const auto& th : seq.thetas) rerr.push_back(trace_distance(evolve_matrix(m, via, th), t.target->matrix));
        extra["recovery_error"] = rerr;
    }
    auto panel = default_panel(m.N(), seed, t.panel_mixed, t.panel_pure);
    if (t.method == "reverse" && t.prepare_input) {
        // two-phase: drive every panel member to the via state first
        auto prep = constant_protocol(m, *t.prepare_input, t.prepare_steps, DensityState::pure(t.via));
        PreparingSequence last = prep;
        last.thetas = {prep.thetas.back()};
        last.n_values = {prep.n_values.back()};
        std::vector<std::pair<int, int>> pairing;
        for (std::size_t k = 0; k < seq.size(); ++k) pairing.emplace_back(0, static_cast<int>(k));
        auto ptr = run_panel(m, last, panel, threads);
        auto joined = concatenate(m, last, seq, pairing, m.max_chain_dim);
        joined.method = "two-phase";
        auto tr = run_panel(m, joined, panel, threads);
        // contractivity: total error <= preparation error + recovery error
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < joined.size(); ++k)
            for (std::size_t s = 0; s < panel.size(); ++s) {
                const double bound = ptr.rows[s].trace_distance + extra["recovery_error"][k].get<double>();
                slack = std::min(slack, bound - tr.rows[k * panel.size() + s].trace_distance);
            }
        extra["prepare_steps"] = t.prepare_steps;
        extra["prepare_error"] = ptr.max_distance(0);
        extra["triangle_slack"] = slack;
        seq = std::move(joined);
    }
    auto tr = run_panel(m, seq, panel, threads);
    json ent = json::array();
    for (std::size_t k = 0; k < seq.size(); ++k) {
        const auto& th = seq.thetas[k];
        if (th.blocks.size() == 1 && th.block_slots[0] <= 10)
            ent.push_back(entanglement_proxy(th.blocks[0], m.d(), th.block_slots[0]));
        else
            ent.push_back(nullptr);
    }
    res.files.emplace_back(stem(t) + "_trace.csv", to_csv(tr));
    res.files.emplace_back(stem(t) + "_sequence.json", to_json(seq, t.emit_max_slots).dump(1) + "\n");
    json out{{"method", seq.method},
             {"n_values", seq.n_values},
             {"skipped", seq.skipped},
             {"normalizers", seq.normalizers},
             {"entanglement_proxy", ent},
             {"panel_size", panel.size()},
             {"convergence", trace_summary(tr)}};
    out.update(extra);
    return out;
}

inline json run_protocol(const Scenario& sc, const TaskPlan& t, std::uint64_t seed, int threads, TaskResult& res) {
    const auto& m = sc.model.model;
    auto seq = constant_protocol(m, t.input, t.n_max, t.target);
    if (t.stride > 1) {
        PreparingSequence thin = seq;
        thin.thetas.clear();
        thin.n_values.clear();
        for (std::size_t k = 0; k < seq.size(); ++k)
            if (seq.n_values[k] % t.stride == 0 || k + 1 == seq.size()) {
                thin.thetas.push_back(seq.thetas[k]);
                thin.n_values.push_back(seq.n_values[k]);
            }
        seq = std::move(thin);
    }
    auto panel = default_panel(m.N(), seed, t.panel_mixed, t.panel_pure);
    auto tr = run_panel(m, seq, panel, threads);
    res.files.emplace_back(stem(t) + "_trace.csv", to_csv(tr));
    return json{{"target", to_json(seq.target.matrix)},
                {"panel_size", panel.size()},
                {"final_min_fidelity", tr.min_fidelity(seq.size() - 1)},
                {"final_max_trace_distance", tr.max_distance(seq.size() - 1)},
                {"convergence", trace_summary(tr)}};
}

inline json run_sweep(const Scenario& sc, const TaskPlan& t, int threads, TaskResult& res) {
    struct Point {
        int N;
        double lambda;
        std::optional<double> omega;
    };
    std::vector<Point> pts;
    for (int N : t.grid_N)
        for (double l : t.grid_lambda) {
            if (t.grid_omega.empty())
                pts.push_back({N, l, std::nullopt});
            else
                for (double w : t.grid_omega) pts.push_back({N, l, w});
        }
    struct Row {
        bool irreducible = false;
        int trapped = 0, fixed = 0;
        AcCertificate cert;
    };
    std::vector<Row> rows(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        MicromaserParams p = *sc.model.micromaser;
        if (pts[i].omega) p = jc_resonant(*pts[i].omega, pts[i].N, pts[i].lambda);
        p.lambda = pts[i].lambda;
        auto model = build_micromaser(p);
        model.max_chain_dim = sc.caps.max_chain_dim;
        model.direction = sc.model.model.direction;
        auto ic = is_irreducible(transition_channel(model));
        CertifyOptions opt;
        opt.kernel_tol = opt.fixed_tol = sc.caps.kernel;
        rows[i] = {ic.irreducible, static_cast<int>(trapped_scan(p).interior.size()), ic.fixed_space_dim,
                   certify_ac(build_extended(model, sc.caps.stationarity), opt)};
    });
    CsvWriter w({"point", "N", "lambda", "omega0_T", "irreducible", "trapped_levels", "stationary_dim", "verdict",
                 "gap"});
    json points = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& r = rows[i];
        w.row(i, pts[i].N, pts[i].lambda, pts[i].omega ? format_double(*pts[i].omega) : std::string(), r.irreducible,
              r.trapped, r.fixed, std::string(to_string(r.cert.verdict)), r.cert.gap);
        points.push_back(json{{"N", pts[i].N},
                              {"lambda", pts[i].lambda},
                              {"omega0_T", pts[i].omega ? json(*pts[i].omega) : json(nullptr)},
                              {"irreducible", r.irreducible},
                              {"trapped_levels", r.trapped},
                              {"stationary_dim", r.fixed},
                              {"verdict", to_string(r.cert.verdict)},
                              {"gap", r.cert.gap}});
    }
    res.files.emplace_back(stem(t) + ".csv", w.str());
    return json{{"points", points}};
}

inline TaskResult run_task(const Scenario& sc, const TaskPlan& t, int threads) {
    TaskResult res;
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = task_seed(sc.seed, t.index);
    const auto& m = sc.model.model;
    CertifyOptions opt;
    opt.kernel_tol = opt.fixed_tol = sc.caps.kernel;
    try {
        json out;
        if (t.type == "stationary") {
            auto rep = stationary_states(transition_channel(m));
            out = to_json(rep);
            out["irreducible"] = rep.fixed_space_dim == 1 && rep.faithful_index.has_value();
            res.files.emplace_back(stem(t) + ".csv", to_csv(rep));
        } else if (t.type == "certify-ac") {
            out = to_json(certify_ac(build_extended(m, sc.caps.stationarity), opt));
        } else if (t.type == "d1") {
            auto r = d1_check(m, t.n_max, t.direct_max, sc.caps.kernel);
            out = to_json(r);
            res.files.emplace_back(stem(t) + ".csv", to_csv(r));
        } else if (t.type == "observability") {
            m.guard(t.n_max);
            auto r = observability_check(m, t.n_max);
            out = to_json(r);
            res.files.emplace_back(stem(t) + ".csv", to_csv(r));
        } else if (t.type == "ac-profile") {
            auto et = build_extended(m, sc.caps.stationarity);
            auto p = ac_profile(et, t.n_max, default_test_set(m.phi, seed, t.random_operators), t.certify, opt);
            out = to_json(p);
            out.erase("defect_per_basis");
            const auto below = p.first_below(0.05);
            out["first_below_0.05"] = below ? json(*below) : json(nullptr);
            res.files.emplace_back(stem(t) + ".csv", to_csv(p));
            CsvWriter w({"n", "operator", "defect"});
            for (std::size_t k = 0; k < p.n_values.size(); ++k)
                for (std::size_t a = 0; a < p.defect_per_basis[k].size(); ++a)
                    w.row(p.n_values[k], a, p.defect_per_basis[k][a]);
            res.files.emplace_back(stem(t) + "_operators.csv", w.str());
        } else if (t.type == "synth") {
            m.guard(t.n_max);
            out = run_synth(sc, t, seed, threads, res);
        } else if (t.type == "protocol") {
            out = run_protocol(sc, t, seed, threads, res);
        } else if (t.type == "sweep") {
            out = run_sweep(sc, t, threads, res);
        }
        res.summary = std::move(out);
    } catch (const ChainCapExceeded& e) {
        res.status = "cap_exceeded";
        res.error = e.what();
        res.files.clear();
    } catch (const std::exception& e) {
        res.status = "failed";
        res.error = e.what();
        res.files.clear();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace detail

// Runs every task; artifacts are written to out_dir when it is non-empty.
inline RunResult execute(const Scenario& sc, const std::string& out_dir, int threads = 1) {
    RunResult run;
    const std::size_t T = sc.tasks.size();
    run.tasks.resize(T);
    const int outer = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(T, 1)));
    const int inner = std::max(1, threads / std::max(outer, 1));
    parallel_for(T, outer, [&](std::size_t i) { run.tasks[i] = detail::run_task(sc, sc.tasks[i], inner); });

    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    json tasks = json::array();
    bool cap = false, failed = false;
    for (std::size_t i = 0; i < T; ++i) {
        auto& r = run.tasks[i];
        const auto& t = sc.tasks[i];
        json entry{{"index", i}, {"type", t.type}, {"status", r.status}, {"seconds", r.seconds}};
        json files = json::array();
        if (r.status == "ok") {
            r.files.emplace_back(detail::stem(t) + ".json", r.summary.dump(1) + "\n");
            entry["result"] = r.summary;
        } else {
            entry["error"] = r.error;
        }
        for (const auto& [name, content] : r.files) {
            if (!out_dir.empty()) write_file((std::filesystem::path(out_dir) / name).string(), content);
            files.push_back(name);
        }
        entry["artifacts"] = files;
        cap = cap || r.status == "cap_exceeded";
        failed = failed || r.status == "failed";
        tasks.push_back(std::move(entry));
    }
    run.exit_code = cap ? 3 : failed ? 1 : 0;
    run.report = json{{"version", kVersion},
                      {"csv_version", kCsvVersion},
                      {"config_hash", config_hash(sc)},
                      {"seed", sc.seed},
                      {"threads", threads},
                      {"model", sc.model.description},
                      {"tasks", tasks},
                      {"exit_code", run.exit_code}};
    if (!out_dir.empty()) write_file((std::filesystem::path(out_dir) / "report.json").string(), run.report.dump(1) + "\n");
    return run;
}

}  // namespace qprep::cli
