#pragma once

#include "sparsenmf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace sparsenmf::bench {

struct BenchResult {
  Index dimension = 0;
  double initial_sparseness = 0.0;
  double target_sparseness = 0.0;
  std::size_t trials = 0;
  std::size_t iterations_min = 0;
  double iterations_mean = 0.0;
  std::size_t iterations_max = 0;
};

struct SkippedCell {
  Index dimension = 0;
  double initial_sparseness = 0.0;
  double target_sparseness = 0.0;
  std::string reason;
};

struct GridReport {
  std::vector<BenchResult> cells;
  std::vector<SkippedCell> skipped;

  /// Cell lookup by exact grid values; nullptr when absent.
  const BenchResult* find(Index dimension, double initial, double target) const;
};

inline const std::vector<Index> kDefaultDimensions = {2, 3, 5, 10, 50, 100, 500, 1000, 3000, 5000, 10000};
inline const std::vector<double> kDefaultSparseness = {0.1, 0.3, 0.5, 0.7, 0.9};
inline constexpr std::size_t kDefaultTrials = 100;

/// Non-negative unit-L2 vector of dimension n with sparseness exactly `s`:
/// i.i.d. exponential magnitudes projected onto the matching L1 norm.
VectorXd generate_with_sparseness(Index n, double s, std::mt19937_64& rng);

/// Per-cell RNG stream, a function of (seed, cell index) only.
std::mt19937_64 cell_rng(std::uint64_t seed, std::uint64_t cell_index);

/// For every (dimension, initial, target) combination, projects `trials`
/// fresh vectors of the initial sparseness onto the target sparseness at unit
/// L2 norm and records the projection's pass counts. Cells run in parallel
/// on up to `threads` workers (0 = hardware concurrency); results do not
/// depend on the thread count.
GridReport run_grid(const std::vector<Index>& dims, const std::vector<double>& levels,
                    std::size_t trials, std::uint64_t seed, unsigned threads = 0);

/// Columns: dim,s_init,s_target,trials,iter_min,iter_mean,iter_max
std::string format_csv(const GridReport& report);
void write_csv(const GridReport& report, const std::filesystem::path& path);

}  // namespace sparsenmf::bench
