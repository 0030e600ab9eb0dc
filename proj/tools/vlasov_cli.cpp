// vlasov_cli <mode> --config <path> [--out <dir>] [--threads N]
//
// Exit codes: 0 success, 1 numerical failure (sub-code in report.txt), 2 usage or config error.
#include <CLI11.hpp>

#include <iostream>

#include "vp/config.hpp"
#include "vp/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Lens-frame Vlasov-Poisson solver with a repulsive harmonic potential"};
    std::string mode, config_path, out_dir = "out";
    int threads = -1;
    app.add_option("mode", mode, "simulate | wave | scatter-map | verify-bounds | diagnose")
        ->required()
        ->check(CLI::IsMember({"simulate", "wave", "scatter-map", "verify-bounds", "diagnose"}));
    app.add_option("--config", config_path, "key = value config file")->required();
    app.add_option("--out", out_dir, "artifact directory");
    app.add_option("--threads", threads, "OpenMP threads (overrides run.threads)")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? vp::exit_ok : vp::exit_usage;
    }

    vp::RunConfig cfg;
    try {
        cfg = vp::load_config(config_path);
    } catch (const vp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return vp::exit_usage;
    }
    if (threads >= 0) cfg.threads = threads;
    if (!cfg.mode.empty() && cfg.mode != mode)
        std::cerr << "note: config mode '" << cfg.mode << "' overridden by '" << mode << "'\n";

    try {
        return vp::run(mode, cfg, out_dir, std::cerr);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return vp::exit_usage;
    }
}
