#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gast/config.hpp"

namespace gast {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> strategies; // comma-separated list
    std::optional<std::string> seeds;      // comma-separated list
    bool svg = false;
    double inject_grad_bias = 0.0; // fault-injection hook for the grad check
};

// Loads the config, applies overrides and the GAST_OUT_ROOT environment
// variable, and validates. Throws on any problem.
RunConfig load_and_merge(const std::string& config_path, const CliOverrides& ovr);

int cmd_train(const std::string& config_path, const CliOverrides& ovr);
int cmd_compare(const std::string& config_path, const CliOverrides& ovr);
int cmd_theory(const std::string& config_path, const CliOverrides& ovr);
int cmd_report(const std::string& artifacts_dir, bool svg);

} // namespace gast
