#include "sparsenmf/benchmark.hpp"

#include "sparsenmf/io.hpp"
#include "sparsenmf/sparseness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

namespace sparsenmf::bench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double exponential(std::mt19937_64& rng) {
  const double u = (double(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  return -std::log(u);
}

struct Cell {
  Index dimension;
  double initial;
  double target;
};

std::optional<std::string> infeasible_reason(const Cell& cell) {
  if (cell.dimension < 2) return "dimension below 2";
  auto bad = [](double s) { return !(s >= 0.0 && s <= 1.0); };
  if (bad(cell.initial) || bad(cell.target)) return "sparseness outside [0, 1]";
  return std::nullopt;
}

BenchResult run_cell(const Cell& cell, std::size_t trials, std::mt19937_64 rng) {
  BenchResult r;
  r.dimension = cell.dimension;
  r.initial_sparseness = cell.initial;
  r.target_sparseness = cell.target;
  r.trials = trials;
  r.iterations_min = trials > 0 ? std::size_t(-1) : 0;
  const auto target = ProjectionTarget<double>::from_sparseness(cell.target, 1.0, cell.dimension);
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const VectorXd start = generate_with_sparseness(cell.dimension, cell.initial, rng);
    const std::size_t iters = project_nonneg(start, target).trace.iterations;
    r.iterations_min = std::min(r.iterations_min, iters);
    r.iterations_max = std::max(r.iterations_max, iters);
    total += double(iters);
  }
  r.iterations_mean = trials > 0 ? total / double(trials) : 0.0;
  return r;
}

}  // namespace

const BenchResult* GridReport::find(Index dimension, double initial, double target) const {
  for (const auto& c : cells)
    if (c.dimension == dimension && c.initial_sparseness == initial && c.target_sparseness == target)
      return &c;
  return nullptr;
}

VectorXd generate_with_sparseness(Index n, double s, std::mt19937_64& rng) {
  const auto target = ProjectionTarget<double>::from_sparseness(s, 1.0, n);
  VectorXd raw(n);
  for (Index i = 0; i < n; ++i) raw[i] = exponential(rng);
  return project_nonneg(raw, target).vector;
}

std::mt19937_64 cell_rng(std::uint64_t seed, std::uint64_t cell_index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(cell_index + 0x632be59bd9b4e019ULL)));
}

GridReport run_grid(const std::vector<Index>& dims, const std::vector<double>& levels,
                    std::size_t trials, std::uint64_t seed, unsigned threads) {
  std::vector<Cell> cells;
  for (Index n : dims)
    for (double initial : levels)
      for (double target : levels) cells.push_back({n, initial, target});

  std::vector<std::optional<BenchResult>> results(cells.size());
  GridReport report;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (auto reason = infeasible_reason(cells[i]))
      report.skipped.push_back({cells[i].dimension, cells[i].initial, cells[i].target, *reason});

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(cells.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      if (!infeasible_reason(cells[i])) results[i] = run_cell(cells[i], trials, cell_rng(seed, i));
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (auto& r : results)
    if (r) report.cells.push_back(*r);
  return report;
}

std::string format_csv(const GridReport& report) {
  std::string out = "dim,s_init,s_target,trials,iter_min,iter_mean,iter_max\n";
  for (const auto& c : report.cells) {
    out += std::to_string(c.dimension) + ',' + io::format_double(c.initial_sparseness) + ',' +
           io::format_double(c.target_sparseness) + ',' + std::to_string(c.trials) + ',' +
           std::to_string(c.iterations_min) + ',' + io::format_double(c.iterations_mean) + ',' +
           std::to_string(c.iterations_max) + '\n';
  }
  return out;
}

void write_csv(const GridReport& report, const std::filesystem::path& path) {
  io::write_text(path, format_csv(report));
}

}  // namespace sparsenmf::bench
