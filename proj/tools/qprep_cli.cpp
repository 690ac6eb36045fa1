// qprep_cli - run or validate a scenario config.
#include <CLI11.hpp>
#include <iostream>

#include "qprep/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"repeated-interaction quantum Markov chain toolkit"};
    app.set_version_flag("--version", qprep::kVersion);
    app.require_subcommand(1);

    std::string config, out_dir = "qprep_out";
    std::optional<std::uint64_t> seed;
    int threads = 1;

    auto* run = app.add_subcommand("run", "execute every task of a config");
    run->add_option("config", config, "scenario JSON")->required();
    run->add_option("--out-dir", out_dir, "directory for report.json and artifacts");
    run->add_option("--seed", seed, "overrides the config seed");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* val = app.add_subcommand("validate", "check a config without computing anything");
    val->add_option("config", config, "scenario JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const auto cfg = qprep::cli::load_json(config);
        if (*val) {
            const auto v = qprep::cli::validate(cfg);
            std::cout << v.text();
            return v.exit_code();
        }
        const auto sc = qprep::cli::parse_scenario(cfg, seed);
        const auto res = qprep::cli::execute(sc, out_dir, threads);
        for (const auto& t : res.report["tasks"]) {
            std::cout << t["index"].get<std::size_t>() << " " << t["type"].get<std::string>() << " "
                      << t["status"].get<std::string>();
            if (t.contains("error")) std::cout << ": " << t["error"].get<std::string>();
            std::cout << "\n";
        }
        std::cout << "report: " << out_dir << "/report.json\n";
        return res.exit_code;
    } catch (const qprep::ConfigError& e) {
        std::cerr << "config error " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
