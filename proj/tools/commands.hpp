#pragma once

// Subcommands of the invdp tool. Each returns the process exit code:
// 0 success / pass, 1 negative analytic result, 2 config error, 3 blow-up.

#include <cstdint>
#include <optional>
#include <string>

namespace invdp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowUp = 3;

struct Args {
    std::string config;
    std::string out;
    std::string matrix;
    std::string cone;
    std::optional<std::uint64_t> seed;
    /// 0 means: INVDP_THREADS, else hardware concurrency.
    int threads = 0;
};

int cmd_simulate(const Args& args);
int cmd_certify(const Args& args);
int cmd_pf(const Args& args);
int cmd_sweep(const Args& args);

/// Dispatches on argv; the testable entry point behind main().
int run(int argc, char** argv);

}  // namespace invdp::cli
