#include <CLI11.hpp>

#include <magnetovar/commands.hpp>

using namespace magnetovar;

int main(int argc, char** argv) {
    CLI::App app{"magnetovar: stray-field variational principles, micromagnetic minimization, thin shells"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    const std::map<std::string, std::string> help{
        {"validate", "run the operator and solver invariant suites"},
        {"demag", "demagnetizing tensor of an ellipsoid"},
        {"solve", "minimize the micromagnetic energy"},
        {"shell-study", "thin-shell convergence table over the eps list"},
        {"oracle", "compare the iterative solver against the dense direct solve"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", config_path, "config file (built-in defaults when omitted)");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "random seed (overrides seed)");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    CommandContext ctx{RunConfig{}, OutputDir{"."}};
    try {
        if (!config_path.empty()) ctx.cfg = parse_run_config(load_config_file(config_path));
        if (chosen->count("--seed")) {
            ctx.cfg.seed = seed;
            ctx.cfg.minimize.seed = seed;
        }
        if (!out_dir.empty()) ctx.cfg.out_dir = out_dir;
        ctx.threads = threads_from_env();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    ctx.out = OutputDir{ctx.cfg.out_dir};
    return run_command(chosen->get_name(), ctx);
}
