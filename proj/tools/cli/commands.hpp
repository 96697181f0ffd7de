#pragma once

#include <iosfwd>

#include "run_config.hpp"

namespace genemeta::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Parses arguments and runs one command. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// The commands themselves; they throw genemeta::Error on failure.
void cmd_preprocess(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_explain(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_synth(const RunConfig& config, std::ostream& out);

}  // namespace genemeta::cli
