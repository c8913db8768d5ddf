#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "sonobox/cli/commands.hpp"
#include "sonobox/common.hpp"

namespace sonobox::cli {

int run_cli(const std::vector<std::string>& args) {
    Options opts;
    CLI::App app{"turn box-drop contact recordings into top-down scene images"};
    app.require_subcommand(1);

    auto add_common = [&opts](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "experiment config file (default: built-in preset)");
        sub->add_option("--scale", opts.scale, "preset to use when no config is given")
            ->check(CLI::IsMember({"desk", "paper"}))
            ->capture_default_str();
        sub->add_option("--seed", opts.seed, "override the command's seed");
        sub->add_option("--out", opts.out, "output location (default: from the config paths)");
        sub->add_flag("--force", opts.force, "overwrite existing output");
        return sub;
    };
    auto add_checkpoints = [&opts](CLI::App* sub) {
        sub->add_option("--checkpoint", opts.checkpoints,
                        "checkpoint file, repeatable or comma-separated for multiple seeds")
            ->delimiter(',');
    };

    add_common(app.add_subcommand("init", "write a full config template"));
    add_common(app.add_subcommand("gen", "simulate episodes into a dataset directory"));
    add_common(app.add_subcommand("train", "fit the scene networks on a generated dataset"));
    auto* eval = add_common(app.add_subcommand("eval", "score checkpoints and baselines on the test split"));
    add_checkpoints(eval);
    auto* ablate = add_common(app.add_subcommand("ablate", "evaluate under input perturbations"));
    add_checkpoints(ablate);
    ablate->add_option("--which", opts.which, "perturbation to apply")
        ->required()
        ->check(CLI::IsMember({"flip", "amplitude", "shift"}));
    ablate->add_option("--magnitude", opts.magnitudes,
                       "shift sizes in frames, or the amplitude threshold")
        ->delimiter(',');
    add_common(app.add_subcommand("tdoa", "run the time-difference baseline on the test split"));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    opts.command = app.get_subcommands().front()->get_name();
    try {
        return run_command(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace sonobox::cli
