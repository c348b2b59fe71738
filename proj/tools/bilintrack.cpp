// Command-line front end: simulate, verify, pe-check, repro.
#include "bilin/commands.hpp"
#include "bilin/errors.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Options {
    std::string config;
    std::optional<std::string> out;
    std::optional<double> dt;
    std::optional<std::string> mode;
    std::optional<std::string> pwm;
    std::optional<std::string> save_config;
    bool regressor = false;
};

bilin::RunConfig effective_config(const Options& opt)
{
    bilin::RunConfig cfg = opt.config.empty() ? bilin::RunConfig{} : bilin::load_config(opt.config);
    if (opt.dt) {
        cfg.scenario.dt = *opt.dt;
    }
    if (opt.mode) {
        cfg.scenario.mode = bilin::parse_control_mode(*opt.mode);
    }
    if (opt.pwm) {
        cfg.scenario.pwm = bilin::parse_pwm_model(*opt.pwm);
    }
    if (opt.out) {
        cfg.output_path = *opt.out;
    }
    cfg.validate();
    if (opt.save_config) {
        std::ofstream file(*opt.save_config);
        if (!file) {
            throw bilin::ConfigError(fmt::format("cannot write '{}'", *opt.save_config));
        }
        file << bilin::serialize_config(cfg);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Passivity-based tracking and adaptive observation for bilinear plants"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config, "INI configuration file (defaults when omitted)");
        sub->add_option("--dt", opt.dt, "override scenario.dt");
        sub->add_option("--mode", opt.mode, "override scenario.mode (full-info, output-feedback, adaptive)");
        sub->add_option("--pwm", opt.pwm, "override scenario.pwm (averaged, switched)");
        sub->add_option("--save-config", opt.save_config, "write the effective configuration");
    };

    auto* simulate = app.add_subcommand("simulate", "run the configured scenario and write a CSV log");
    add_common(simulate);
    simulate->add_option("--out", opt.out, "CSV path (overrides output.path)");

    auto* verify = app.add_subcommand("verify", "check the certificates and the reference");
    add_common(verify);

    auto* pe = app.add_subcommand("pe-check", "excitation levels of the Q-Gram, u_d and the regressor");
    add_common(pe);
    pe->add_flag("--regressor", opt.regressor, "also simulate and analyse the filtered regressor");

    auto* repro = app.add_subcommand("repro", "reproduce the event-schedule study into fig2..fig6.csv");
    add_common(repro);
    repro->add_option("--out", opt.out, "output directory")->default_str("repro");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : bilin::cli::kExitFailure;
    }

    bilin::RunConfig cfg;
    try {
        cfg = effective_config(opt);
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return bilin::cli::kExitFailure;
    }

    if (*simulate) {
        return bilin::cli::cmd_simulate(cfg, cfg.output_path, std::cout, std::cerr);
    }
    if (*verify) {
        return bilin::cli::cmd_verify(cfg, std::cout, std::cerr);
    }
    if (*pe) {
        return bilin::cli::cmd_pe_check(cfg, opt.regressor, std::cout, std::cerr);
    }
    return bilin::cli::cmd_repro(cfg, opt.out.value_or("repro"), std::cout, std::cerr);
}
