#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace wval {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitBudget = 2;
inline constexpr int kExitUsage = 64;

/// Runs the command line (args excludes the program name). Records go to
/// `out`, diagnostics and usage to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Pinned reproductions; each returns the "outputs" object with pass flags.
nlohmann::json reproduce_ex1(int l);
nlohmann::json reproduce_ex2(int l, int horizon, std::size_t samples, std::uint64_t seed);
nlohmann::json reproduce_blind_limsup(int horizon, int max_memory);
nlohmann::json reproduce_known_payoffs(int horizon, std::size_t samples, std::uint64_t seed,
                                       int num_strategies);

/// Probability that n fair coin flips contain no run of l heads.
double no_run_probability(int l, int n);
/// Smallest multiple of 50 l (at least 50 l) whose no-run probability is <= eps.
int run_block_horizon(int l, double eps = 1e-5);

}  // namespace wval
