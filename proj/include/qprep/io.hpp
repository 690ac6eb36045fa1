// io.hpp - JSON and CSV serialization. Complex numbers are [re, im] pairs,
// matrices are arrays of rows.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "completeness.hpp"
#include "micromaser.hpp"
#include "models.hpp"
#include "preparation.hpp"
#include "stationary.hpp"

namespace qprep {

using json = nlohmann::json;

inline constexpr const char* kVersion = "qprep 0.1.0";
inline constexpr int kCsvVersion = 1;

// Config problems, located by a JSON pointer into the document.
struct ConfigError : std::runtime_error {
    std::string pointer;
    std::string message;
    ConfigError(std::string ptr, const std::string& msg)
        : std::runtime_error((ptr.empty() ? std::string("/") : ptr) + ": " + msg), pointer(std::move(ptr)), message(msg) {}
};

// shortest round-trip form, identical across runs
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

// ---- complex numbers and matrices -------------------------------------------

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const RealVector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline double number_from_json(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline int int_from_json(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

inline cplx complex_from_json(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(path, "expected a number or an [re, im] pair");
}

inline Matrix matrix_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
    const auto rows = static_cast<Index>(j.size());
    if (!j[0].is_array() || j[0].empty()) throw ConfigError(path + "/0", "expected a non-empty row");
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const std::string rp = path + "/" + std::to_string(i);
        if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols)
            throw ConfigError(rp, "row length differs from " + std::to_string(cols));
        for (Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(j[i][k], rp + "/" + std::to_string(k));
    }
    return m;
}

inline Vector vector_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i], path + "/" + std::to_string(i));
    return v;
}

inline const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(path + "/" + key, "missing required field");
    return *it;
}

// ---- states -------------------------------------------------------------------

// Accepted forms: matrix; "maximally_mixed"; {"basis": k}; {"vector": [...]};
// {"diagonal": [...]}; {"density": matrix}.
inline DensityState state_from_json(const json& j, int dim, const std::string& path) {
    try {
        if (j.is_string()) {
            if (j.get<std::string>() == "maximally_mixed") return DensityState::maximally_mixed(FactorDims{dim});
            throw ConfigError(path, "unknown state name '" + j.get<std::string>() + "'");
        }
        Matrix m;
        if (j.is_array()) {
            m = matrix_from_json(j, path);
        } else if (j.is_object() && j.contains("basis")) {
            const int k = int_from_json(j["basis"], path + "/basis");
            if (k < 0 || k >= dim) throw ConfigError(path + "/basis", "index out of range [0, " + std::to_string(dim) + ")");
            return DensityState::basis(dim, k);
        } else if (j.is_object() && j.contains("vector")) {
            Vector v = vector_from_json(j["vector"], path + "/vector");
            if (v.size() != dim) throw ConfigError(path + "/vector", "expected length " + std::to_string(dim));
            if (v.norm() < 1e-300) throw ConfigError(path + "/vector", "zero vector");
            return DensityState::pure(v);
        } else if (j.is_object() && j.contains("diagonal")) {
            Vector v = vector_from_json(j["diagonal"], path + "/diagonal");
            if (v.size() != dim) throw ConfigError(path + "/diagonal", "expected length " + std::to_string(dim));
            m = v.asDiagonal();
        } else if (j.is_object() && j.contains("density")) {
            m = matrix_from_json(j["density"], path + "/density");
        } else {
            throw ConfigError(path, "unrecognized state specification");
        }
        if (m.rows() != dim || m.cols() != dim)
            throw ConfigError(path, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " density");
        return DensityState(m, FactorDims{dim});
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

// ---- models -----------------------------------------------------------------

inline json to_json(const CouplingModel& m) {
    return json{{"type", "coupling"},
                {"N", m.N()},
                {"d", m.d()},
                {"direction", to_string(m.direction)},
                {"u", to_json(m.u.matrix)},
                {"phi", to_json(m.phi.matrix)},
                {"psi", to_json(m.psi.matrix)},
                {"max_chain_dim", m.max_chain_dim}};
}

inline json to_json(const MicromaserParams& p) {
    json blocks = json::array();
    for (const auto& b : p.blocks)
        blocks.push_back(json::array({json::array({to_json(b[0]), to_json(b[1])}), json::array({to_json(b[2]), to_json(b[3])})}));
    return json{{"type", "micromaser"}, {"N", p.N}, {"lambda", p.lambda}, {"alpha0", to_json(p.alpha0)}, {"blocks", blocks}};
}

inline Direction direction_from_json(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected \"forward\" or \"reverse\"");
    const auto s = j.get<std::string>();
    if (s == "forward") return Direction::forward;
    if (s == "reverse") return Direction::reverse;
    throw ConfigError(path, "expected \"forward\" or \"reverse\", got '" + s + "'");
}

// Numbers, or strings such as "pi/3", "2pi", "2*pi", "0.5*pi".
inline double angle_from_json(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw ConfigError(path, "expected a number or a multiple of pi");
    std::string s;
    for (char c : j.get<std::string>())
        if (c != ' ') s += c;
    const auto pos = s.find("pi");
    if (pos == std::string::npos) throw ConfigError(path, "expected a multiple of pi, e.g. \"pi/3\"");
    std::string head = s.substr(0, pos), tail = s.substr(pos + 2);
    if (!head.empty() && head.back() == '*') head.pop_back();
    double num = 1.0, den = 1.0;
    try {
        if (!head.empty()) num = std::stod(head);
        if (!tail.empty()) {
            if (tail[0] != '/') throw ConfigError(path, "malformed angle '" + j.get<std::string>() + "'");
            den = std::stod(tail.substr(1));
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError(path, "malformed angle '" + j.get<std::string>() + "'");
    }
    if (den == 0.0) throw ConfigError(path, "division by zero");
    return num * std::numbers::pi / den;
}

struct ModelSpec {
    CouplingModel model;
    std::optional<MicromaserParams> micromaser;
    json description;
};

inline MicromaserParams micromaser_from_json(const json& j, const std::string& path) {
    const int N = int_from_json(member(j, "N", path), path + "/N");
    if (N < 2) throw ConfigError(path + "/N", "micromaser needs N >= 2");
    const double lambda = j.contains("lambda") ? number_from_json(j["lambda"], path + "/lambda") : 1.0 / 3;
    if (!(lambda >= 0.0 && lambda < 0.5)) throw ConfigError(path + "/lambda", "lambda must lie in [0, 1/2)");
    MicromaserParams p;
    if (j.contains("omega0_T")) {
        if (j.contains("blocks")) throw ConfigError(path, "give either omega0_T or blocks, not both");
        p = jc_resonant(angle_from_json(j["omega0_T"], path + "/omega0_T"), N, lambda);
    } else if (j.contains("blocks")) {
        const json& bl = j["blocks"];
        const std::string bp = path + "/blocks";
        if (!bl.is_array() || static_cast<int>(bl.size()) != N - 1)
            throw ConfigError(bp, "expected " + std::to_string(N - 1) + " 2x2 blocks");
        p.N = N;
        p.lambda = lambda;
        p.alpha0 = j.contains("alpha0") ? complex_from_json(j["alpha0"], path + "/alpha0") : cplx(1.0);
        for (std::size_t k = 0; k < bl.size(); ++k) {
            Matrix b = matrix_from_json(bl[k], bp + "/" + std::to_string(k));
            if (b.rows() != 2 || b.cols() != 2) throw ConfigError(bp + "/" + std::to_string(k), "expected a 2x2 block");
            p.blocks.push_back({b(0, 0), b(0, 1), b(1, 0), b(1, 1)});
        }
    } else {
        throw ConfigError(path, "micromaser needs omega0_T or blocks");
    }
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path + (j.contains("blocks") ? "/blocks" : ""), e.what());
    }
    return p;
}

inline ModelSpec model_from_json(const json& j, const std::string& path, double unitary_tol = 1e-10) {
    const std::string type = [&] {
        const json& t = member(j, "type", path);
        if (!t.is_string()) throw ConfigError(path + "/type", "expected a string");
        return t.get<std::string>();
    }();
    ModelSpec spec;
    if (type == "micromaser") {
        spec.micromaser = micromaser_from_json(j, path);
        spec.model = build_micromaser(*spec.micromaser);
    } else if (type == "preset") {
        const json& n = member(j, "name", path);
        if (!n.is_string()) throw ConfigError(path + "/name", "expected a string");
        const std::string name = n.get<std::string>();
        const int N = j.contains("N") ? int_from_json(j["N"], path + "/N") : 2;
        const int d = j.contains("d") ? int_from_json(j["d"], path + "/d") : N;
        if (N < 1 || d < 1) throw ConfigError(path, "dimensions must be positive");
        if (name == "swap") {
            if (d != N) throw ConfigError(path + "/d", "swap needs d = N");
            spec.model = j.contains("psi") ? swap_model(state_from_json(j["psi"], N, path + "/psi")) : swap_model(N);
        } else if (name == "identity") {
            spec.model = identity_model(N, d);
        } else if (name == "twisted_flip") {
            spec.model = twisted_flip_model();
        } else {
            throw ConfigError(path + "/name", "unknown preset '" + name + "' (swap, identity, twisted_flip)");
        }
    } else if (type == "coupling") {
        const int N = int_from_json(member(j, "N", path), path + "/N");
        const int d = int_from_json(member(j, "d", path), path + "/d");
        if (N < 1 || d < 1) throw ConfigError(path, "dimensions must be positive");
        Matrix u = matrix_from_json(member(j, "u", path), path + "/u");
        if (u.rows() != N * d || u.cols() != N * d)
            throw ConfigError(path + "/u", "expected a " + std::to_string(N * d) + "x" + std::to_string(N * d) + " matrix");
        const double defect = unitarity_defect(u);
        if (defect > unitary_tol)
            throw ConfigError(path + "/u", "not unitary: max |u*u - 1| = " + format_double(defect));
        DensityState phi = state_from_json(member(j, "phi", path), N, path + "/phi");
        DensityState psi = state_from_json(member(j, "psi", path), d, path + "/psi");
        Direction dir = j.contains("direction") ? direction_from_json(j["direction"], path + "/direction") : Direction::forward;
        spec.model = make_model(u, N, d, phi, psi, dir, unitary_tol);
    } else {
        throw ConfigError(path + "/type", "unknown model type '" + type + "' (coupling, micromaser, preset)");
    }
    if (type != "coupling" && j.contains("direction"))
        spec.model.direction = direction_from_json(j["direction"], path + "/direction");
    if (j.contains("max_chain_dim")) {
        if (!j["max_chain_dim"].is_number_integer() || j["max_chain_dim"].get<long long>() < 1)
            throw ConfigError(path + "/max_chain_dim", "expected a positive integer");
        spec.model.max_chain_dim = j["max_chain_dim"].get<long long>();
    }
    spec.description = spec.micromaser ? to_json(*spec.micromaser) : json{{"type", type}};
    spec.description["N"] = spec.model.N();
    spec.description["d"] = spec.model.d();
    spec.description["direction"] = to_string(spec.model.direction);
    return spec;
}

// ---- reports ----------------------------------------------------------------

inline json to_json(const StationaryReport& r) {
    json dens = json::array();
    for (const auto& s : r.stationary_densities) dens.push_back(to_json(s.matrix));
    json out{{"fixed_space_dim", r.fixed_space_dim},
             {"route", r.route},
             {"residuals", r.residuals},
             {"support_ranks", r.support_ranks},
             {"densities", dens}};
    out["faithful_index"] = r.faithful_index ? json(*r.faithful_index) : json(nullptr);
    return out;
}

inline json to_json(const AcCertificate& c) {
    json out{{"verdict", to_string(c.verdict)},
             {"route", c.route},
             {"omega_defect", c.omega_defect},
             {"fixed_space_dim", c.fixed_space_dim},
             {"gap", c.gap},
             {"kernel_dim", c.kernel_dim},
             {"message", c.message}};
    if (c.witness) {
        out["witness"] = to_json(*c.witness);
        out["witness_kind"] = c.witness_kind;
    }
    return out;
}

inline json to_json(const AcProfile& p) {
    return json{{"n_values", p.n_values},
                {"max_defect", p.max_defect},
                {"min_eig_sum", p.min_eig_sum},
                {"distance_to_identity", p.distance_to_identity},
                {"isometry_defect", p.isometry_defect},
                {"defect_per_basis", p.defect_per_basis},
                {"monotone", p.monotone()},
                {"certificate", to_json(p.certificate)}};
}

inline json to_json(const D1Report& r) {
    json out{{"irreducible", r.irreducible},
             {"min_eig", r.min_eig},
             {"kernel_dims", r.kernel_dims},
             {"injective", r.injective},
             {"direct_kernel_dims", r.direct_kernel_dims},
             {"result", r.result}};
    out["first_positive"] = r.first_positive ? json(*r.first_positive) : json(nullptr);
    return out;
}

inline json to_json(const ObservabilityReport& r) {
    json sv = json::array();
    for (const auto& s : r.singular_values) sv.push_back(to_json(s));
    json out{{"n_values", r.n_values}, {"ranks", r.ranks}, {"full_rank", r.full_rank}, {"singular_values", sv}};
    out["full_rank_at"] = r.full_rank_at ? json(*r.full_rank_at) : json(nullptr);
    return out;
}

inline json to_json(const PreparingSequence& s, int emit_max_slots = 6) {
    json thetas = json::array();
    for (std::size_t k = 0; k < s.size(); ++k) {
        json t{{"n", s.n_values[k]}, {"block_slots", s.thetas[k].block_slots}};
        if (s.n_values[k] <= emit_max_slots) t["density"] = to_json(s.thetas[k].dense());
        thetas.push_back(std::move(t));
    }
    json out{{"method", s.method},
             {"target", to_json(s.target.matrix)},
             {"n_values", s.n_values},
             {"skipped", s.skipped},
             {"normalizers", s.normalizers},
             {"thetas", thetas}};
    out["compatible_group"] = s.compatible_group ? json(*s.compatible_group) : json(nullptr);
    return out;
}

// ---- CSV ----------------------------------------------------------------------

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
        out_ << "# qprep-csv v" << kCsvVersion << "\n";
        row_strings(header);
    }
    template <class... T>
    void row(const T&... v) {
        std::vector<std::string> cells{cell(v)...};
        row_strings(cells);
    }
    void row_strings(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }
    std::string str() const { return out_.str(); }

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "true" : "false"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

private:
    std::size_t cols_;
    std::ostringstream out_;
};

inline std::string to_csv(const ConvergenceTrace& tr) {
    CsvWriter w({"n", "sigma_id", "trace_distance", "fidelity"});
    for (const auto& r : tr.rows) w.row(r.n, r.sigma_id, r.trace_distance, r.fidelity);
    return w.str();
}

inline std::string to_csv(const AcProfile& p) {
    CsvWriter w({"n", "max_defect", "min_eig_sum", "distance_to_identity", "isometry_defect"});
    for (std::size_t k = 0; k < p.n_values.size(); ++k)
        w.row(p.n_values[k], p.max_defect[k], p.min_eig_sum[k], p.distance_to_identity[k], p.isometry_defect[k]);
    return w.str();
}

inline std::string to_csv(const D1Report& r) {
    CsvWriter w({"n", "min_eig", "kernel_dim", "direct_kernel_dim"});
    for (std::size_t n = 0; n < r.min_eig.size(); ++n)
        w.row(static_cast<int>(n), r.min_eig[n], r.kernel_dims[n],
              n < r.direct_kernel_dims.size() ? std::to_string(r.direct_kernel_dims[n]) : std::string());
    return w.str();
}

inline std::string to_csv(const ObservabilityReport& r) {
    CsvWriter w({"n", "rank", "max_singular", "min_singular"});
    for (std::size_t k = 0; k < r.n_values.size(); ++k) {
        const auto& sv = r.singular_values[k];
        w.row(r.n_values[k], r.ranks[k], sv.size() ? sv(0) : 0.0, sv.size() ? sv(sv.size() - 1) : 0.0);
    }
    return w.str();
}

inline std::string to_csv(const StationaryReport& r) {
    CsvWriter w({"index", "support_rank", "residual", "min_eigenvalue", "faithful"});
    for (std::size_t k = 0; k < r.stationary_densities.size(); ++k)
        w.row(k, r.support_ranks[k], r.residuals[k], min_eigenvalue(r.stationary_densities[k].matrix),
              r.faithful_index && *r.faithful_index == static_cast<int>(k));
    return w.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

}  // namespace qprep
