#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gast/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gast: gradient-aligned sparse tuning laboratory"};
    app.require_subcommand(1);

    gast::CliOverrides ovr;
    std::string config_path;
    std::string artifacts_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run config (json)")->required();
        sub->add_option("--seed", ovr.seed, "override the run seed");
        sub->add_option("--out", ovr.out_dir, "override the output directory");
    };

    CLI::App* train = app.add_subcommand("train", "run one training experiment");
    add_common(train);
    train->add_flag("--svg", ovr.svg, "also render svg plots");

    CLI::App* compare = app.add_subcommand("compare", "run a strategy comparison");
    add_common(compare);
    compare->add_option("--strategies", ovr.strategies,
                        "comma-separated strategy list (overrides config)");
    compare->add_option("--seeds", ovr.seeds, "comma-separated seed list (overrides config)");
    compare->add_flag("--svg", ovr.svg, "also render svg plots");

    CLI::App* theory = app.add_subcommand("theory", "run the theory checks");
    add_common(theory);
    theory->add_option("--inject-grad-bias", ovr.inject_grad_bias,
                       "fault-injection: bias added to analytic gradients")
        ->group(""); // hidden test hook

    CLI::App* report = app.add_subcommand("report", "validate artifacts and render plots");
    report->add_option("--dir", artifacts_dir, "artifacts directory")->required();
    report->add_flag("--svg", ovr.svg, "render svg plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return gast::kExitConfig;
    }

    if (train->parsed()) {
        return gast::cmd_train(config_path, ovr);
    }
    if (compare->parsed()) {
        return gast::cmd_compare(config_path, ovr);
    }
    if (theory->parsed()) {
        return gast::cmd_theory(config_path, ovr);
    }
    return gast::cmd_report(artifacts_dir, ovr.svg);
}
