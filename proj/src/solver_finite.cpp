#include "minsoftmax/solver_finite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace minsoftmax {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Error all_infinite(ErrorContext ctx = {}) {
  return Error(ErrorKind::AllAlphasInfinite,
               "every disturbance has zero empirical probability under gamma_H > 0", ctx);
}

double max_alpha(std::span<const double> alphas) {
  double m = kNegInf;
  for (double a : alphas) m = std::max(m, a);
  return m;
}

SolveResult make_result(const FiniteSystem& sys, const Penalties& pen, const SolveOptions& opt) {
  SolveResult r;
  r.horizon = sys.horizon();
  r.n_states = sys.n_states();
  r.n_inputs = sys.n_inputs();
  r.n_dist = sys.n_dist();
  const auto h = static_cast<std::size_t>(r.horizon);
  const auto ns = static_cast<std::size_t>(r.n_states);
  r.values.resize((h + 1) * ns);
  r.policy.resize(h * ns);
  if (pen.zero_temperature())
    r.worst_case.resize(h * ns);
  else
    r.adversary.resize(h * ns * static_cast<std::size_t>(r.n_dist));
  if (opt.full_adversary)
    r.full_adversary.resize(h * ns * static_cast<std::size_t>(r.n_inputs) * r.n_dist);
  for (int x = 0; x < r.n_states; ++x)
    r.values[h * ns + static_cast<std::size_t>(x)] = sys.terminal_cost(x);
  return r;
}

// Stores the adversary for one (k, x, u) row into `out`: a distribution when
// γ_E > 0, a one-hot vector otherwise.
void store_adversary(std::span<const double> alphas, const Penalties& pen, std::span<double> out) {
  if (!pen.zero_temperature()) {
    softmax_adversary(alphas, pen, out);
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<std::size_t>(worst_case_index(alphas))] = 1.0;
}

// Computes stage k of the recursion for a single state. `scratch` and `best`
// are n_dist-sized work buffers.
void solve_state(const FiniteSystem& sys, const Penalties& pen, SolveResult& res, int k, int x,
                 std::vector<double>& scratch, std::vector<double>& best) {
  const auto ns = static_cast<std::size_t>(res.n_states);
  const auto nw = static_cast<std::size_t>(res.n_dist);
  const auto next = res.stage_values(k + 1);
  const std::size_t sx = static_cast<std::size_t>(k) * ns + static_cast<std::size_t>(x);

  double best_total = std::numeric_limits<double>::infinity();
  int best_u = -1;
  for (int u = 0; u < res.n_inputs; ++u) {
    fill_alphas(sys, pen, next, k, x, u, scratch);
    double q;
    try {
      q = q_value(scratch, pen);
    } catch (const Error&) {
      throw all_infinite({k, x, u});
    }
    const double total = sys.stage_cost(x, u) + q;
    if (best_u < 0 || total < best_total) {
      best_total = total;
      best_u = u;
      best.swap(scratch);
    }
    if (!res.full_adversary.empty()) {
      // `best` may now hold this input's alphas; pick whichever buffer does.
      const auto& row = (best_u == u) ? best : scratch;
      store_adversary(row, pen,
                      {res.full_adversary.data() + (sx * res.n_inputs + u) * nw, nw});
    }
  }
  res.values[sx] = best_total;
  res.policy[sx] = best_u;
  if (pen.zero_temperature())
    res.worst_case[sx] = worst_case_index(best);
  else
    softmax_adversary(best, pen, {res.adversary.data() + sx * nw, nw});
}

}  // namespace

void fill_alphas(const FiniteSystem& sys, const Penalties& pen,
                 std::span<const double> next_values, int k, int x, int u,
                 std::span<double> out) {
  const auto targets = sys.next_row(x, u);
  const double gh = pen.gamma_h();
  if (gh == 0.0) {
    for (std::size_t w = 0; w < targets.size(); ++w) out[w] = next_values[targets[w]];
    return;
  }
  const auto log_r = sys.log_empirical(k, x, u);
  for (std::size_t w = 0; w < targets.size(); ++w)
    out[w] = log_r[w] == kNegInf ? kNegInf : gh * log_r[w] + next_values[targets[w]];
}

AlphaRow make_alpha_row(const FiniteSystem& sys, const Penalties& pen,
                        std::span<const double> next_values, int k, int x, int u) {
  AlphaRow row;
  row.alphas.resize(static_cast<std::size_t>(sys.n_dist()));
  fill_alphas(sys, pen, next_values, k, x, u, row.alphas);
  return row;
}

double q_value(std::span<const double> alphas, const Penalties& pen) {
  const double m = max_alpha(alphas);
  if (m == kNegInf) throw all_infinite();
  if (pen.zero_temperature()) return m;
  const double ge = pen.gamma_e();
  double sum = 0.0;
  for (double a : alphas)
    if (a != kNegInf) sum += std::exp((a - m) / ge);
  return m + ge * std::log(sum);
}

void softmax_adversary(std::span<const double> alphas, const Penalties& pen,
                       std::span<double> out) {
  if (pen.zero_temperature())
    throw Error(ErrorKind::TemperatureZero,
                "softmax adversary needs gamma_E > 0; use worst_case_index");
  const double m = max_alpha(alphas);
  if (m == kNegInf) throw all_infinite();
  const double ge = pen.gamma_e();
  double sum = 0.0;
  for (std::size_t w = 0; w < alphas.size(); ++w) {
    out[w] = alphas[w] == kNegInf ? 0.0 : std::exp((alphas[w] - m) / ge);
    sum += out[w];
  }
  for (std::size_t w = 0; w < alphas.size(); ++w) out[w] /= sum;
}

std::vector<double> softmax_adversary(std::span<const double> alphas, const Penalties& pen) {
  std::vector<double> out(alphas.size());
  softmax_adversary(alphas, pen, out);
  return out;
}

int worst_case_index(std::span<const double> alphas) {
  int best = -1;
  double m = kNegInf;
  for (std::size_t w = 0; w < alphas.size(); ++w)
    if (alphas[w] > m) {
      m = alphas[w];
      best = static_cast<int>(w);
    }
  if (best < 0) throw all_infinite();
  return best;
}

SolveResult solve_backward(const FiniteSystem& sys, const Penalties& pen,
                           const SolveOptions& options) {
  SolveResult res = make_result(sys, pen, options);
  const auto nw = static_cast<std::size_t>(sys.n_dist());

  for (int k = sys.horizon() - 1; k >= 0; --k) {
    std::optional<Error> failure;
    int failed_state = sys.n_states();
#pragma omp parallel
    {
      std::vector<double> scratch(nw), best(nw);
#pragma omp for schedule(static)
      for (int x = 0; x < sys.n_states(); ++x) {
        try {
          solve_state(sys, pen, res, k, x, scratch, best);
        } catch (const Error& e) {
#pragma omp critical(minsoftmax_solve_error)
          if (x < failed_state) {
            failed_state = x;
            failure = e;
          }
        }
      }
    }
    if (failure) throw *failure;
  }
  return res;
}

SolveResult solve_backward_serial(const FiniteSystem& sys, const Penalties& pen,
                                  const SolveOptions& options) {
  SolveResult res = make_result(sys, pen, options);
  const auto ns = static_cast<std::size_t>(sys.n_states());
  const auto nw = static_cast<std::size_t>(sys.n_dist());

  for (int k = sys.horizon() - 1; k >= 0; --k) {
    const auto next = res.stage_values(k + 1);
    for (int x = 0; x < sys.n_states(); ++x) {
      const std::size_t sx = static_cast<std::size_t>(k) * ns + static_cast<std::size_t>(x);
      std::vector<AlphaRow> rows;
      std::vector<double> totals;
      for (int u = 0; u < sys.n_inputs(); ++u) {
        rows.push_back(make_alpha_row(sys, pen, next, k, x, u));
        double q;
        try {
          q = q_value(rows.back(), pen);
        } catch (const Error&) {
          throw all_infinite({k, x, u});
        }
        totals.push_back(sys.stage_cost(x, u) + q);
      }
      const int u_star = static_cast<int>(std::min_element(totals.begin(), totals.end()) -
                                          totals.begin());
      res.values[sx] = totals[static_cast<std::size_t>(u_star)];
      res.policy[sx] = u_star;
      if (pen.zero_temperature())
        res.worst_case[sx] = worst_case_index(rows[static_cast<std::size_t>(u_star)]);
      else
        softmax_adversary(rows[static_cast<std::size_t>(u_star)], pen,
                          {res.adversary.data() + sx * nw, nw});
      if (!res.full_adversary.empty())
        for (int u = 0; u < sys.n_inputs(); ++u)
          store_adversary(rows[static_cast<std::size_t>(u)], pen,
                          {res.full_adversary.data() + (sx * sys.n_inputs() + u) * nw, nw});
    }
  }
  return res;
}

std::vector<double> q_values(const FiniteSystem& sys, const Penalties& pen,
                             std::span<const double> next_values, int k, int x) {
  std::vector<double> q(static_cast<std::size_t>(sys.n_inputs()));
  for (int u = 0; u < sys.n_inputs(); ++u)
    q[static_cast<std::size_t>(u)] = q_value(make_alpha_row(sys, pen, next_values, k, x, u), pen);
  return q;
}

double judged_cost(const FiniteSystem& sys, const Penalties& pen,
                   std::span<const double> next_values, int k, int x, int u) {
  const AlphaRow row = make_alpha_row(sys, pen, next_values, k, x, u);
  const auto targets = sys.next_row(x, u);
  if (pen.zero_temperature())
    return next_values[targets[static_cast<std::size_t>(worst_case_index(row))]];
  const auto p = softmax_adversary(row, pen);
  double e = 0.0;
  for (std::size_t w = 0; w < p.size(); ++w)
    if (p[w] > 0.0) e += p[w] * next_values[targets[w]];
  return e;
}

// --------------------------------------------------------------------------
// Limit regimes
// --------------------------------------------------------------------------

SolveResult solve_limit(const FiniteSystem& sys, const LimitRegime& regime) {
  if (regime.kind == RegimeKind::RiskSensitive && !(regime.gamma > 0.0))
    throw Error(ErrorKind::InvalidArgument, "risk-sensitive regime needs gamma > 0");

  const bool deterministic = regime.kind == RegimeKind::Minimax || regime.kind == RegimeKind::MlCe;
  SolveResult res;
  res.horizon = sys.horizon();
  res.n_states = sys.n_states();
  res.n_inputs = sys.n_inputs();
  res.n_dist = sys.n_dist();
  const auto h = static_cast<std::size_t>(res.horizon);
  const auto ns = static_cast<std::size_t>(res.n_states);
  const auto nw = static_cast<std::size_t>(res.n_dist);
  res.values.assign((h + 1) * ns, 0.0);
  res.policy.assign(h * ns, 0);
  if (deterministic)
    res.worst_case.assign(h * ns, 0);
  else
    res.adversary.assign(h * ns * nw, 0.0);
  for (int x = 0; x < sys.n_states(); ++x) res.values[h * ns + x] = sys.terminal_cost(x);

  for (int k = sys.horizon() - 1; k >= 0; --k) {
    const double* next = res.values.data() + (k + 1) * ns;
    for (int x = 0; x < sys.n_states(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      int best_u = 0;
      int best_w = 0;
      std::vector<double> best_p;
      for (int u = 0; u < sys.n_inputs(); ++u) {
        const auto r = sys.empirical(k, x, u);
        const auto targets = sys.next_row(x, u);
        double q = 0.0;
        int w_pick = 0;
        std::vector<double> p;
        switch (regime.kind) {
          case RegimeKind::Minimax: {
            q = next[targets[0]];
            for (std::size_t w = 1; w < nw; ++w)
              if (next[targets[w]] > q) {
                q = next[targets[w]];
                w_pick = static_cast<int>(w);
              }
            break;
          }
          case RegimeKind::MlCe: {
            for (std::size_t w = 1; w < nw; ++w)
              if (r[w] > r[static_cast<std::size_t>(w_pick)]) w_pick = static_cast<int>(w);
            q = next[targets[static_cast<std::size_t>(w_pick)]];
            break;
          }
          case RegimeKind::RiskSensitive: {
            const double g = regime.gamma;
            double shift = -std::numeric_limits<double>::infinity();
            for (std::size_t w = 0; w < nw; ++w)
              if (r[w] > 0.0) shift = std::max(shift, next[targets[w]]);
            p.assign(nw, 0.0);
            double z = 0.0;
            for (std::size_t w = 0; w < nw; ++w)
              if (r[w] > 0.0) {
                p[w] = r[w] * std::exp(g * (next[targets[w]] - shift));
                z += p[w];
              }
            for (auto& v : p) v /= z;
            q = shift + std::log(z) / g;
            break;
          }
          case RegimeKind::Sdp: {
            for (std::size_t w = 0; w < nw; ++w) q += r[w] * next[targets[w]];
            p.assign(r.begin(), r.end());
            break;
          }
        }
        const double total = sys.stage_cost(x, u) + q;
        if (total < best) {
          best = total;
          best_u = u;
          best_w = w_pick;
          best_p = std::move(p);
        }
      }
      const std::size_t sx = static_cast<std::size_t>(k) * ns + x;
      res.values[sx] = best;
      res.policy[sx] = best_u;
      if (deterministic)
        res.worst_case[sx] = best_w;
      else
        std::copy(best_p.begin(), best_p.end(), res.adversary.begin() + sx * nw);
    }
  }
  return res;
}

}  // namespace minsoftmax
