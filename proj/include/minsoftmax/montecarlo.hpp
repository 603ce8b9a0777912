#pragma once

// Monte-Carlo rollouts of solved finite-space policies.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "minsoftmax/core.hpp"

namespace minsoftmax {

enum class DisturbanceModel {
  Empirical,    // r(·|x,u) from the system
  Adversarial,  // p* stored in the solve result (or its worst case when γ_E = 0)
  FixedTable,   // caller-supplied rows, same layout rules as the empirical table
};

struct RolloutSpec {
  int n_rollouts = 1;
  std::uint64_t seed = 0;
  DisturbanceModel model = DisturbanceModel::Empirical;
  EmpiricalLayout fixed_layout = EmpiricalLayout::Shared;
  std::vector<double> fixed_table;
  int initial_state = 0;
  /// When non-empty, x_0 is drawn from this distribution instead.
  std::vector<double> initial_distribution;

  /// Keep the raw state sequences. Above `spill_threshold` state visits they
  /// are written to `spill_path` instead of held in memory.
  bool keep_trajectories = false;
  std::size_t spill_threshold = 1'000'000;
  std::filesystem::path spill_path;
};

/// Affine index-to-physical map value = offset + slope·index.
struct StateMap {
  double offset = 0.0;
  double slope = 1.0;
};

struct Band {
  double low = 0.0;
  double high = 0.0;
};

struct TrajectoryStats {
  int n_rollouts = 0;
  std::vector<double> mean_state;      // h+1 entries, mapped units
  std::vector<double> state_std;       // sample standard deviation
  std::vector<Band> sigma_band;        // mean ± σ
  std::vector<Band> two_sigma_band;    // mean ± 2σ
  double mean_cost = 0.0;
  double cost_std = 0.0;
  double cost_std_error = 0.0;
};

struct RolloutOutput {
  TrajectoryStats stats;
  /// n_rollouts × (h+1) state indices, rollout-major; empty unless kept in memory.
  std::vector<std::int32_t> trajectories;
  std::vector<double> costs;  // per rollout, Σ g + g_h
  std::optional<std::filesystem::path> spill_file;
};

/// Throws ModelMismatch if `result` does not belong to `sys` or the requested
/// model has no table; InvalidArgument for a malformed spec. Parallel over
/// rollouts; the output does not depend on the thread count.
RolloutOutput rollout(const FiniteSystem& sys, const SolveResult& result, const RolloutSpec& spec,
                      const StateMap& map = {});

/// Single-threaded reference for `rollout`; bitwise-identical output.
RolloutOutput rollout_serial(const FiniteSystem& sys, const SolveResult& result,
                             const RolloutSpec& spec, const StateMap& map = {});

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean cumulative cost and its standard error (sample std / sqrt(n)).
CostEstimate empirical_cost_estimate(const FiniteSystem& sys, const SolveResult& result,
                                     const RolloutSpec& spec);

/// Header plus one row per stage:
/// stage mean sigma_low sigma_high two_sigma_low two_sigma_high.
/// Values use 12 significant digits.
void write_stats_table(std::ostream& os, const TrajectoryStats& stats);

}  // namespace minsoftmax
