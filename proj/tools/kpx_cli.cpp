// kpx: batch front-end for the lattice counting, resonance, norm, estimate
// probe and solver experiments. Every run resolves a full configuration
// (defaults < config file < command-line flags), embeds its hash in all
// outputs and is byte-reproducible at --threads 1.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "kpx/experiment.hpp"

namespace {

std::string flag_name(const std::string& key) {
    std::string s = "--" + key;
    for (char& c : s)
        if (c == '_') c = '-';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kpx: numerical experiments for dispersion-generalised KP-II on the 3-torus"};
    app.require_subcommand(1);

    struct SubState {
        std::string config_path;
        bool validate_only = false;
        std::map<std::string, std::string> flags;
    };
    std::map<std::string, SubState> states;

    for (const auto& [command, specs] : kpx::command_registry()) {
        auto* sub = app.add_subcommand(command);
        auto& st = states[command];
        sub->add_option("--config", st.config_path, "key = value configuration file");
        sub->add_flag("--validate-only", st.validate_only,
                      "report hypothesis diagnostics and exit");
        for (const auto& spec : specs) {
            sub->add_option_function<std::string>(
                   flag_name(spec.key),
                   [&st, key = spec.key](const std::string& v) { st.flags[key] = v; },
                   spec.help)
                ->default_str(spec.def);
        }
    }

    CLI11_PARSE(app, argc, argv);

    std::string command = app.get_subcommands().front()->get_name();
    const SubState& st = states[command];

    try {
        std::map<std::string, std::string> file_params;
        if (!st.config_path.empty()) {
            std::ifstream is(st.config_path);
            if (!is) throw kpx::usage_error("cannot open config file " + st.config_path);
            std::stringstream ss;
            ss << is.rdbuf();
            file_params = kpx::parse_config_text(ss.str());
        }
        kpx::ExperimentConfig cfg = kpx::make_config(command, file_params, st.flags);

        auto diags = kpx::validate_experiment(cfg);
        if (st.validate_only) {
            if (diags.empty()) {
                std::cout << "ok: hypotheses satisfied\n";
            } else {
                for (const auto& d : diags) std::cout << "diagnostic: " << d << "\n";
            }
            return 0;
        }
        for (const auto& d : diags) std::cerr << "diagnostic: " << d << "\n";

        int rc = kpx::run_experiment(cfg);
        std::cout << command << ": config " << cfg.hash_hex() << " -> " << cfg.raw("output")
                  << (rc == 0 ? " (ok)" : " (acceptance violation)") << "\n";
        return rc;
    } catch (const kpx::usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const kpx::hypothesis_error& e) {
        std::cerr << "hypothesis error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
