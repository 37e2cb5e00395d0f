#pragma once

#include <cstdint>
#include <vector>

#include "sclood/run_config.hpp"

namespace sclood {

/// Values to sweep; an empty axis keeps the base config's value.
struct SweepGrid {
  std::vector<Schedule> schedules;
  std::vector<FinetuneLoss> losses;
  std::vector<DetectorKind> detectors;
  std::vector<double> epsilons;
  std::vector<std::size_t> batch_sizes;
  std::vector<std::size_t> rep_dims;
  std::vector<double> data_fractions;
  std::vector<std::uint64_t> seeds;
};

struct SweepRow {
  RunConfig config;
  MetricsReport metrics;
};

/// Cartesian product in the axis order above; numeric axes are sorted
/// ascending. run_id of each point is "<base run_id>-<index>".
std::vector<RunConfig> expand_grid(const RunConfig& base, const SweepGrid& grid);

/// Runs every grid point; `jobs` worker threads share the immutable dataset.
/// Output order matches expand_grid regardless of `jobs`.
std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepGrid& grid, const DatasetBundle& bundle,
                                std::size_t jobs = 1);

}  // namespace sclood
