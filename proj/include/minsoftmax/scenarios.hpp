#pragma once

// Scenario files and the bundled example systems.
//
// A scenario is a JSON document:
//
//   { "schema_version": 1,
//     "kind": "finite" | "lq",
//     "name": "...",
//     "finite": { "n_states", "n_inputs", "n_dist", "horizon",
//                 "transition":    [...] | {"file": "t.csv"},
//                 "stage_cost":    [...],
//                 "terminal_cost": [...],
//                 "empirical": {"layout": "shared"|"per_pair"|"per_stage",
//                               "rows": [[...], ...] | "file": "r.csv"} },
//     "lq": { "A": [[...]], "B", "D", "Q", "R", "Q_h", "horizon": h | null },
//     "units":     { "state"|"input"|"disturbance": {"offset", "slope"} },
//     "penalties": [[gamma_h, gamma_e], ...],
//     "rollout":   { "n_rollouts", "seed", "initial_state", "model" } }
//
// Side files are comma-separated with a header row. Each record starts with
// its index columns (k, x, u as the layout requires) followed by n_dist values.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "minsoftmax/core.hpp"
#include "minsoftmax/montecarlo.hpp"

namespace minsoftmax {

struct UnitMaps {
  std::optional<StateMap> state;
  std::optional<StateMap> input;
  std::optional<StateMap> disturbance;
};

struct RolloutDefaults {
  int n_rollouts = 5000;
  std::uint64_t seed = 1;
  int initial_state = 0;
  DisturbanceModel model = DisturbanceModel::Empirical;
};

struct ScenarioFile {
  int schema_version = 1;
  std::string name;
  std::optional<FiniteSystem> finite;
  std::optional<LqSystem> lq;
  UnitMaps units;
  std::vector<Penalties> penalties;
  std::optional<RolloutDefaults> rollout;

  bool is_finite() const noexcept { return finite.has_value(); }
};

/// Throws ParseError (malformed JSON, missing or mistyped fields, unreadable
/// side files), SchemaVersionUnsupported, or ValidationFailure whose violation
/// fields carry JSON paths such as "finite.empirical".
ScenarioFile load_scenario(const std::filesystem::path& path);

struct SaveOptions {
  /// Store the transition table and per-pair/per-stage empirical rows in
  /// side files next to the scenario instead of inline.
  bool side_files = false;
};

/// Writes `scenario` (atomically). Side files are named <stem>.transition.csv
/// and <stem>.empirical.csv.
void save_scenario(const std::filesystem::path& path, const ScenarioFile& scenario,
                   const SaveOptions& options = {});

// --------------------------------------------------------------------------
// Bundled examples
// --------------------------------------------------------------------------

struct IrrigationOptions {
  /// Mixture weights of the uniform, [−15,−5] and [−13,−2] components.
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  int horizon = 8;
};

/// Index-to-physical maps of the irrigation example: moisture %, irrigation mm
/// and evaporation/rain mm, with 0-based indices.
UnitMaps irrigation_units();

/// 100 moisture states, 75 irrigation inputs, 40 evaporation/rain values.
FiniteSystem build_irrigation(const IrrigationOptions& options = {});

/// Irrigation system with units, the four comparison penalty pairs and the
/// rollout defaults (5000 runs from 25% moisture).
ScenarioFile irrigation_scenario(const IrrigationOptions& options = {});

/// Index of the state nearest 25% moisture, the default rollout start.
inline constexpr int kIrrigationInitialState = 49;

/// One-stage design example with U = {0, 1} and g_h(x) = x on the state
/// values 0, 100, …, 10000. u = 0 lands on 4000 surely; u = 1 lands on a
/// uniform floor of mass 0.998 over all values plus mass 0.002 spread over
/// 1900, 2000 and 2100, so E_r[J | u = 1] = 4994.
FiniteSystem build_fig3_scenario();

/// One-stage design example with U = {0, 1} and g_h(x) = x on the state values
/// {0, …, 14, 4000, 10000}. u = 0 lands on 4000 surely; under u = 1 the atom
/// 10000 carries probability 1e-4 and is both the most likely disturbance and
/// the worst case, while the remaining 0.9999 is split over 10005 smaller
/// atoms on the values 0..14.
FiniteSystem build_fig4_scenario();

/// Physical value of every state of the design examples, by index.
std::vector<double> fig3_state_values();
std::vector<double> fig4_state_values();

inline constexpr double kFig3FloorMass = 0.998;
inline constexpr double kFig4TopMass = 1e-4;
inline constexpr int kFig4AtomsPerValue = 667;

struct GridRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform grids on the given ranges; transitions round Ax + Bu + Dw to the
/// nearest grid state (saturating at the ends); bin w carries the N(0,1) mass
/// between the midpoints to its neighbours, outer bins extending to ±∞.
/// Stage cost Qx² + Ru², terminal cost Q_h x². Throws DegenerateGrid if any
/// n < 3 and InvalidArgument for a non-scalar or infinite-horizon system.
FiniteSystem discretize_scalar_lq(const LqSystem& lq, GridRange x_range, GridRange u_range,
                                  GridRange w_range, int n_x, int n_u, int n_w);

/// Grid value of index i on `range` with n points.
double grid_value(GridRange range, int n, int i);

// --------------------------------------------------------------------------
// Random instances
// --------------------------------------------------------------------------

struct RandomSystemOptions {
  int n_states = 5;
  int n_inputs = 3;
  int n_dist = 3;
  int horizon = 3;
  double cost_scale = 10.0;      // stage and terminal costs uniform in [0, cost_scale]
  double zero_fraction = 0.0;    // chance that an empirical entry is zeroed
  /// Every empirical row is a permutation of one base vector with a unique
  /// maximum, so each (x, u) has a unique modal disturbance of equal mass.
  bool shared_modal_mass = false;
  EmpiricalLayout layout = EmpiricalLayout::PerPair;
};

/// Deterministic in `seed`. Rows always keep at least one positive entry.
FiniteSystem random_finite_system(std::uint64_t seed, const RandomSystemOptions& options = {});

/// A probability vector of length n with entries bounded away from zero.
std::vector<double> random_distribution(std::uint64_t seed, int n);

}  // namespace minsoftmax
