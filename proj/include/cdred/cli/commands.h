#pragma once

#include <string>

namespace cdred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Subcommands: gen-expert, train, eval, sweep, export-plots.
int run(int argc, char** argv);

// Every TrainConfig key with its default and range, one per line.
std::string config_help();

// $CDRED_RUN_ROOT, else "runs".
std::string run_root();

}  // namespace cdred::cli
