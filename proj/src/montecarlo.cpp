#include "minsoftmax/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "minsoftmax/io.hpp"
#include "minsoftmax/philox.hpp"

namespace minsoftmax {

namespace {

constexpr std::uint32_t kLaneDisturbance = 0;
constexpr std::uint32_t kLaneInitial = 1;

int sample_index(std::span<const double> row, double u) {
  double acc = 0.0;
  int last = -1;
  for (std::size_t w = 0; w < row.size(); ++w) {
    if (row[w] <= 0.0) continue;
    acc += row[w];
    last = static_cast<int>(w);
    if (u < acc) return last;
  }
  return last;  // u beyond the rounded total
}

std::size_t fixed_rows(const FiniteSystem& sys, EmpiricalLayout layout) {
  const auto pairs = static_cast<std::size_t>(sys.n_states()) * sys.n_inputs();
  switch (layout) {
    case EmpiricalLayout::Shared: return 1;
    case EmpiricalLayout::PerPair: return pairs;
    case EmpiricalLayout::PerStage: return pairs * sys.horizon();
  }
  return 0;
}

void check_spec(const FiniteSystem& sys, const SolveResult& res, const RolloutSpec& spec) {
  if (res.n_states != sys.n_states() || res.n_inputs != sys.n_inputs() ||
      res.n_dist != sys.n_dist() || res.horizon != sys.horizon() ||
      res.values.size() != static_cast<std::size_t>(res.horizon + 1) * res.n_states ||
      res.policy.size() != static_cast<std::size_t>(res.horizon) * res.n_states)
    throw Error(ErrorKind::ModelMismatch, "solve result does not match the system dimensions");
  if (spec.n_rollouts < 1) throw Error(ErrorKind::InvalidArgument, "n_rollouts must be >= 1");
  if (spec.model == DisturbanceModel::Adversarial && !res.has_distribution() &&
      res.worst_case.empty())
    throw Error(ErrorKind::ModelMismatch, "adversarial model requested but result has no adversary");
  if (spec.model == DisturbanceModel::FixedTable) {
    const auto nw = static_cast<std::size_t>(sys.n_dist());
    const std::size_t rows = fixed_rows(sys, spec.fixed_layout);
    if (spec.fixed_table.size() != rows * nw)
      throw Error(ErrorKind::ShapeMismatch, "fixed table has " +
                                                std::to_string(spec.fixed_table.size()) +
                                                " entries, expected " + std::to_string(rows * nw));
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t w = 0; w < nw; ++w) {
        const double v = spec.fixed_table[r * nw + w];
        if (!std::isfinite(v) || v < 0.0)
          throw Error(ErrorKind::NonStochasticRow, "fixed table row " + std::to_string(r));
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw Error(ErrorKind::NonStochasticRow, "fixed table row " + std::to_string(r));
    }
  }
  if (spec.initial_distribution.empty()) {
    if (spec.initial_state < 0 || spec.initial_state >= sys.n_states())
      throw Error(ErrorKind::InvalidArgument, "initial state out of range");
  } else {
    if (spec.initial_distribution.size() != static_cast<std::size_t>(sys.n_states()))
      throw Error(ErrorKind::ShapeMismatch, "initial distribution needs one entry per state");
    double sum = 0.0;
    for (double v : spec.initial_distribution) {
      if (!std::isfinite(v) || v < 0.0)
        throw Error(ErrorKind::NonStochasticRow, "initial distribution has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw Error(ErrorKind::NonStochasticRow, "initial distribution does not sum to 1");
  }
}

std::span<const double> fixed_row(const FiniteSystem& sys, const RolloutSpec& spec, int k, int x,
                                  int u) {
  const auto nw = static_cast<std::size_t>(sys.n_dist());
  std::size_t row = 0;
  switch (spec.fixed_layout) {
    case EmpiricalLayout::Shared: break;
    case EmpiricalLayout::PerPair: row = static_cast<std::size_t>(x) * sys.n_inputs() + u; break;
    case EmpiricalLayout::PerStage:
      row = (static_cast<std::size_t>(k) * sys.n_states() + x) * sys.n_inputs() + u;
      break;
  }
  return {spec.fixed_table.data() + row * nw, nw};
}

// Simulates rollout `i`, writing h+1 states to `traj`; returns the cumulative cost.
double simulate(const FiniteSystem& sys, const SolveResult& res, const RolloutSpec& spec,
                std::uint64_t i, std::int32_t* traj) {
  int x = spec.initial_distribution.empty()
              ? spec.initial_state
              : sample_index(spec.initial_distribution,
                             counter_uniform(spec.seed, i, 0, kLaneInitial));
  double cost = 0.0;
  for (int k = 0; k < sys.horizon(); ++k) {
    traj[k] = x;
    const int u = res.action(k, x);
    cost += sys.stage_cost(x, u);
    const double draw = counter_uniform(spec.seed, i, static_cast<std::uint32_t>(k), kLaneDisturbance);
    int w = 0;
    switch (spec.model) {
      case DisturbanceModel::Empirical: w = sample_index(sys.empirical(k, x, u), draw); break;
      case DisturbanceModel::FixedTable: w = sample_index(fixed_row(sys, spec, k, x, u), draw); break;
      case DisturbanceModel::Adversarial:
        w = res.has_distribution() ? sample_index(res.adversary_row(k, x), draw)
                                   : res.worst_index(k, x);
        break;
    }
    x = sys.next(x, u, w);
  }
  traj[sys.horizon()] = x;
  return cost + sys.terminal_cost(x);
}

// Running mean and sum of squared deviations, fed in rollout order.
struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double stddev() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

class Accumulator {
 public:
  Accumulator(int horizon, const StateMap& map)
      : map_(map), stages_(static_cast<std::size_t>(horizon) + 1) {}

  void push(const std::int32_t* traj, double cost) {
    for (std::size_t k = 0; k < stages_.size(); ++k)
      stages_[k].push(map_.offset + map_.slope * traj[k]);
    cost_.push(cost);
  }

  TrajectoryStats finish() const {
    TrajectoryStats s;
    s.n_rollouts = static_cast<int>(cost_.n);
    for (const auto& st : stages_) {
      const double sd = st.stddev();
      s.mean_state.push_back(st.mean);
      s.state_std.push_back(sd);
      s.sigma_band.push_back({st.mean - sd, st.mean + sd});
      s.two_sigma_band.push_back({st.mean - 2.0 * sd, st.mean + 2.0 * sd});
    }
    s.mean_cost = cost_.mean;
    s.cost_std = cost_.stddev();
    s.cost_std_error = s.cost_std / std::sqrt(static_cast<double>(cost_.n));
    return s;
  }

 private:
  StateMap map_;
  std::vector<Welford> stages_;
  Welford cost_;
};

bool spills(const FiniteSystem& sys, const RolloutSpec& spec) {
  const auto visits = static_cast<std::size_t>(spec.n_rollouts) * (sys.horizon() + 1);
  if (!spec.keep_trajectories || visits <= spec.spill_threshold) return false;
  if (spec.spill_path.empty())
    throw Error(ErrorKind::InvalidArgument,
                "trajectory store exceeds the spill threshold but no spill path was given");
  return true;
}

void write_spill_header(std::ostream& os, int horizon) {
  os << "rollout";
  for (int k = 0; k <= horizon; ++k) os << " x_" << k;
  os << " cost\n";
}

void write_spill_rows(std::ostream& os, const std::int32_t* traj, const double* costs,
                      std::size_t first, std::size_t count, int horizon) {
  const auto len = static_cast<std::size_t>(horizon) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    os << first + i;
    for (std::size_t k = 0; k < len; ++k) os << ' ' << traj[i * len + k];
    os << ' ' << format_real(costs[i]) << '\n';
  }
}

}  // namespace

RolloutOutput rollout(const FiniteSystem& sys, const SolveResult& result, const RolloutSpec& spec,
                      const StateMap& map) {
  check_spec(sys, result, spec);
  const bool spill = spills(sys, spec);
  const auto n = static_cast<std::size_t>(spec.n_rollouts);
  const auto len = static_cast<std::size_t>(sys.horizon()) + 1;
  const std::size_t chunk =
      std::max<std::size_t>(1, std::min(n, std::max<std::size_t>(spec.spill_threshold, len) / len));

  RolloutOutput out;
  out.costs.resize(n);
  if (spec.keep_trajectories && !spill) out.trajectories.resize(n * len);
  Accumulator acc(sys.horizon(), map);
  std::vector<std::int32_t> buffer;

  auto run = [&](std::ostream* spill_os) {
    for (std::size_t first = 0; first < n; first += chunk) {
      const std::size_t count = std::min(chunk, n - first);
      std::int32_t* traj;
      if (!out.trajectories.empty()) {
        traj = out.trajectories.data() + first * len;
      } else {
        buffer.resize(count * len);
        traj = buffer.data();
      }
      const auto count_i = static_cast<long long>(count);
#pragma omp parallel for schedule(static)
      for (long long j = 0; j < count_i; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        out.costs[first + ju] = simulate(sys, result, spec, first + ju, traj + ju * len);
      }
      for (std::size_t j = 0; j < count; ++j) acc.push(traj + j * len, out.costs[first + j]);
      if (spill_os) write_spill_rows(*spill_os, traj, out.costs.data() + first, first, count,
                                     sys.horizon());
    }
  };

  if (spill) {
    write_file_atomic(spec.spill_path, [&](std::ostream& os) {
      write_spill_header(os, sys.horizon());
      run(&os);
    });
    out.spill_file = spec.spill_path;
  } else {
    run(nullptr);
  }
  out.stats = acc.finish();
  return out;
}

RolloutOutput rollout_serial(const FiniteSystem& sys, const SolveResult& result,
                             const RolloutSpec& spec, const StateMap& map) {
  check_spec(sys, result, spec);
  const bool spill = spills(sys, spec);
  const auto n = static_cast<std::size_t>(spec.n_rollouts);
  const auto len = static_cast<std::size_t>(sys.horizon()) + 1;

  std::vector<std::int32_t> traj(n * len);
  RolloutOutput out;
  out.costs.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.costs[i] = simulate(sys, result, spec, i, &traj[i * len]);

  Accumulator acc(sys.horizon(), map);
  for (std::size_t i = 0; i < n; ++i) acc.push(&traj[i * len], out.costs[i]);
  out.stats = acc.finish();

  if (spill) {
    write_file_atomic(spec.spill_path, [&](std::ostream& os) {
      write_spill_header(os, sys.horizon());
      write_spill_rows(os, traj.data(), out.costs.data(), 0, n, sys.horizon());
    });
    out.spill_file = spec.spill_path;
  } else if (spec.keep_trajectories) {
    out.trajectories = std::move(traj);
  }
  return out;
}

CostEstimate empirical_cost_estimate(const FiniteSystem& sys, const SolveResult& result,
                                     const RolloutSpec& spec) {
  RolloutSpec quiet = spec;
  quiet.keep_trajectories = false;
  const TrajectoryStats s = rollout(sys, result, quiet).stats;
  return {s.mean_cost, s.cost_std_error};
}

void write_stats_table(std::ostream& os, const TrajectoryStats& s) {
  os << "stage mean sigma_low sigma_high two_sigma_low two_sigma_high\n";
  for (std::size_t k = 0; k < s.mean_state.size(); ++k)
    os << k << ' ' << format_real(s.mean_state[k]) << ' ' << format_real(s.sigma_band[k].low) << ' '
       << format_real(s.sigma_band[k].high) << ' ' << format_real(s.two_sigma_band[k].low) << ' '
       << format_real(s.two_sigma_band[k].high) << '\n';
}

}  // namespace minsoftmax
