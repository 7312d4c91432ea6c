#include "sca/campaign.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <string>

int main(int argc, char **argv) {
    CLI::App app{"Side-channel analysis toolkit: synthetic leakage, template "
                 "attacks, UMDA-driven POI search, guessing-entropy evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    sca::CliOverrides overrides;
    std::uint64_t seed = 0;
    std::string out_dir;
    unsigned threads = 0;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--config", config_path, "campaign config (JSON)")->required();
        cmd->add_option("--seed", seed, "override the campaign seed")
            ->each([&](const std::string &) { overrides.seed = seed; });
        cmd->add_option("--out", out_dir, "override the output directory")
            ->each([&](const std::string &) { overrides.out_dir = out_dir; });
        cmd->add_option("--threads", threads, "worker threads (results are thread-count independent)")
            ->each([&](const std::string &) { overrides.threads = threads; });
    };

    add_common(app.add_subcommand("simulate", "generate a synthetic trace set"));
    add_common(app.add_subcommand("attack", "profile, attack, and write the ge curve"));
    add_common(app.add_subcommand("eda-search", "UMDA POI search plus confirmation attack"));
    add_common(app.add_subcommand("evaluate", "compare named attack configurations"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    return sca::run_command(app.get_subcommands().front()->get_name(), config_path, overrides);
}
