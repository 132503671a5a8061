// fpt: command-line front end of the harness.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fpt/harness.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
    auto* opt = cmd->add_option("--config", c.config, "key = value configuration file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output directory (default: output_dir of the config)");
    cmd->add_option("--seed", c.seed, "base seed, overrides traj.seed");
    cmd->add_flag("--quiet", c.quiet, "no progress on stderr");
}

fpt::RunOptions run_options(const Common& c, const CLI::App* cmd) {
    fpt::RunOptions o;
    o.quiet = c.quiet;
    if (cmd->count("--seed")) o.seed = c.seed;
    return o;
}

void report(const fpt::RunResult& r, bool quiet) {
    if (quiet) return;
    for (const auto& [k, v] : r.info) std::cerr << k << " = " << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback-induced phase transition toolkit"};
    app.require_subcommand(1);

    Common common;
    std::string context;
    const std::pair<const char*, const char*> runs[] = {
        {"spectrum", "D(w) and S(w) on a frequency grid"},
        {"critical", "G_crit and stability roots on a G/G_crit grid"},
        {"variance-sweep", "stationary variance and critical-exponent fit"},
        {"traj", "one conditional trajectory"},
        {"ensemble", "ensemble of trajectories with a reducer"},
        {"bath-compare", "feedback term against an equivalent bath"},
    };
    for (const auto& [name, help] : runs) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, common, true);
    }

    std::string preset_name;
    auto* preset_cmd = app.add_subcommand("preset", "figure parameter sets");
    preset_cmd->add_option("name", preset_name, "fig2a, fig2b, fig3 or figS2")
        ->required()
        ->check(CLI::IsMember({"fig2a", "fig2b", "fig3", "figS2"}));
    add_common(preset_cmd, common, false);

    auto* bec_cmd = app.add_subcommand("bec-map", "condensate parameters to model units");
    add_common(bec_cmd, common, true);

    CLI11_PARSE(app, argc, argv);
    auto* cmd = app.get_subcommands().front();
    context = cmd->get_name();

    try {
        if (cmd == preset_cmd) {
            context += " " + preset_name;
            const auto r = fpt::run_preset(preset_name, common.out.empty() ? "." : common.out,
                                           run_options(common, cmd));
            if (!common.quiet)
                for (const auto& f : r.files) std::cout << f.string() << '\n';
            return 0;
        }
        if (cmd == bec_cmd) {
            std::ifstream in(common.config);
            std::stringstream ss;
            ss << in.rdbuf();
            const auto m = fpt::bec_to_model(fpt::parse_bec_config(ss.str()));
            std::ostringstream text;
            text.precision(17);
            text << "# omega_R = " << m.omega_R_kHz << " kHz\n"
                 << "# feedback_scale = " << m.feedback_scale << "  (G I(t) = feedback_scale V0(t))\n"
                 << "model.delta = " << m.model.delta << " omega_R\n"
                 << "model.omega_R = 1 omega_R\n"
                 << "model.g = " << m.model.g << " omega_R\n"
                 << "model.kappa = " << m.model.kappa << " omega_R\n"
                 << "model.G = " << m.model.G << " omega_R\n"
                 << "model.N = " << m.model.N << '\n';
            if (common.out.empty()) {
                std::cout << text.str();
            } else {
                std::ofstream out(common.out);
                if (!out) throw fpt::Error(fpt::Errc::IoError, "cannot write " + common.out);
                out << text.str();
            }
            return 0;
        }
        auto cfg = fpt::load_config(common.config, context);
        if (!common.out.empty()) cfg.output_dir = common.out;
        const auto r = fpt::run_experiment(cfg, run_options(common, cmd));
        report(r, common.quiet);
        if (!common.quiet)
            for (const auto& f : r.files) std::cout << f.string() << '\n';
    } catch (const fpt::Error& e) {
        std::cerr << fpt::error_record(e, context) << '\n';
        return e.code() == fpt::Errc::ConfigError || e.code() == fpt::Errc::IoError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << fpt::error_record(fpt::Error(fpt::Errc::IoError, e.what()), context) << '\n';
        return 1;
    }
    return 0;
}
