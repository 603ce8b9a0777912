// minsoftmax command-line front end.
//
// Exit codes: 0 success, 1 invalid input, 2 solver infeasibility
// (gamma_H below critical), 3 verification failure.

#include <omp.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "minsoftmax/io.hpp"
#include "minsoftmax/lq_gauss.hpp"
#include "minsoftmax/montecarlo.hpp"
#include "minsoftmax/oracle.hpp"
#include "minsoftmax/scenarios.hpp"
#include "minsoftmax/solver_finite.hpp"

namespace fs = std::filesystem;
using namespace minsoftmax;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, std::string(flag) + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, std::string(flag) + ": empty list");
  return out;
}

std::string fmt(double v) { return format_real(v); }

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t policy_hash(const SolveResult& r) {
  return fnv1a(r.policy.data(), r.policy.size() * sizeof(std::int32_t));
}

std::uint64_t gain_hash(const std::vector<Eigen::MatrixXd>& gains) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& g : gains) h = fnv1a(g.data(), static_cast<std::size_t>(g.size()) * sizeof(double), h);
  return h;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create directory " + dir.string());
}

Eigen::VectorXd lq_point(const std::string& list, int n) {
  if (list.empty()) return Eigen::VectorXd::Ones(n);
  const auto v = parse_list(list, "--x0");
  if (static_cast<int>(v.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "--x0 needs " + std::to_string(n) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

int finite_x0(const ScenarioFile& sc, std::optional<int> flag) {
  const int x0 = flag ? *flag : (sc.rollout ? sc.rollout->initial_state : 0);
  if (x0 < 0 || x0 >= sc.finite->n_states())
    throw Error(ErrorKind::InvalidArgument, "initial state out of range");
  return x0;
}

// ---------------------------------------------------------------- writers

void write_finite_solution(const fs::path& dir, const SolveResult& r) {
  ensure_dir(dir);
  write_file_atomic(dir / "values.txt", [&](std::ostream& os) {
    os << "stage state value\n";
    for (int k = 0; k <= r.horizon; ++k)
      for (int x = 0; x < r.n_states; ++x) os << k << ' ' << x << ' ' << fmt(r.value(k, x)) << '\n';
  });
  write_file_atomic(dir / "policy.txt", [&](std::ostream& os) {
    os << "stage state input\n";
    for (int k = 0; k < r.horizon; ++k)
      for (int x = 0; x < r.n_states; ++x) os << k << ' ' << x << ' ' << r.action(k, x) << '\n';
  });
  if (r.has_distribution()) {
    write_file_atomic(dir / "adversary.txt", [&](std::ostream& os) {
      os << "stage state dist probability\n";
      for (int k = 0; k < r.horizon; ++k)
        for (int x = 0; x < r.n_states; ++x) {
          const auto row = r.adversary_row(k, x);
          for (int w = 0; w < r.n_dist; ++w)
            os << k << ' ' << x << ' ' << w << ' ' << fmt(row[static_cast<std::size_t>(w)]) << '\n';
        }
    });
  } else {
    write_file_atomic(dir / "worst_case.txt", [&](std::ostream& os) {
      os << "stage state dist\n";
      for (int k = 0; k < r.horizon; ++k)
        for (int x = 0; x < r.n_states; ++x) os << k << ' ' << x << ' ' << r.worst_index(k, x) << '\n';
    });
  }
  if (!r.full_adversary.empty()) {
    write_file_atomic(dir / "adversary_full.txt", [&](std::ostream& os) {
      os << "stage state input dist probability\n";
      std::size_t i = 0;
      for (int k = 0; k < r.horizon; ++k)
        for (int x = 0; x < r.n_states; ++x)
          for (int u = 0; u < r.n_inputs; ++u)
            for (int w = 0; w < r.n_dist; ++w, ++i)
              os << k << ' ' << x << ' ' << u << ' ' << w << ' ' << fmt(r.full_adversary[i]) << '\n';
    });
  }
}

void write_matrix_rows(std::ostream& os, int stage, const Eigen::MatrixXd& m) {
  os << stage;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << fmt(m(i, j));
  os << '\n';
}

std::string matrix_header(const char* prefix, Eigen::Index rows, Eigen::Index cols) {
  std::string h;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      h += std::string(" ") + prefix + "_" + std::to_string(i) + std::to_string(j);
  return h;
}

void write_lq_solution(const fs::path& dir, const LqSystem& lq, const LqSolution& s) {
  ensure_dir(dir);
  const int nx = lq.n_x(), nu = lq.n_u(), nw = lq.n_w();
  write_file_atomic(dir / "p.txt", [&](std::ostream& os) {
    os << "stage" << matrix_header("p", nx, nx) << '\n';
    for (std::size_t k = 0; k < s.p_mats.size(); ++k) write_matrix_rows(os, static_cast<int>(k), s.p_mats[k]);
  });
  write_file_atomic(dir / "zeta.txt", [&](std::ostream& os) {
    os << "stage zeta\n";
    for (std::size_t k = 0; k < s.zetas.size(); ++k) os << k << ' ' << fmt(s.zetas[k]) << '\n';
  });
  write_file_atomic(dir / "gains.txt", [&](std::ostream& os) {
    os << "stage" << matrix_header("g", nu, nx) << '\n';
    for (int k = 0; k < s.horizon(); ++k) write_matrix_rows(os, k, s.gains[static_cast<std::size_t>(k)]);
  });
  write_file_atomic(dir / "adversary.txt", [&](std::ostream& os) {
    os << "stage" << matrix_header("mean", nw, nx) << matrix_header("cov", nw, nw) << '\n';
    for (int k = 0; k < s.horizon(); ++k) {
      const auto ks = static_cast<std::size_t>(k);
      Eigen::MatrixXd row(1, nw * nx + nw * nw);
      std::ostringstream line;
      line << k;
      for (Eigen::Index i = 0; i < nw; ++i)
        for (Eigen::Index j = 0; j < nx; ++j) line << ' ' << fmt(s.adversary_mean_maps[ks](i, j));
      for (Eigen::Index i = 0; i < nw; ++i)
        for (Eigen::Index j = 0; j < nw; ++j) line << ' ' << fmt(s.adversary_covs[ks](i, j));
      os << line.str() << '\n';
    }
  });
}

void write_lq_infinite(const fs::path& dir, const LqSystem& lq, const InfiniteHorizonSolution& s) {
  ensure_dir(dir);
  const int nx = lq.n_x(), nu = lq.n_u(), nw = lq.n_w();
  write_file_atomic(dir / "p.txt", [&](std::ostream& os) {
    os << "stage" << matrix_header("p", nx, nx) << '\n';
    write_matrix_rows(os, 0, s.p);
  });
  write_file_atomic(dir / "gains.txt", [&](std::ostream& os) {
    os << "stage" << matrix_header("g", nu, nx) << '\n';
    write_matrix_rows(os, 0, s.gain);
  });
  write_file_atomic(dir / "adversary.txt", [&](std::ostream& os) {
    os << "stage" << matrix_header("mean", nw, nx) << matrix_header("cov", nw, nw) << '\n';
    std::ostringstream line;
    line << 0;
    for (Eigen::Index i = 0; i < nw; ++i)
      for (Eigen::Index j = 0; j < nx; ++j) line << ' ' << fmt(s.adversary_mean_map(i, j));
    for (Eigen::Index i = 0; i < nw; ++i)
      for (Eigen::Index j = 0; j < nw; ++j) line << ' ' << fmt(s.adversary_cov(i, j));
    os << line.str() << '\n';
  });
  write_file_atomic(dir / "fixed_point.txt", [&](std::ostream& os) {
    os << "iterations zeta_per_stage\n" << s.iterations << ' ' << fmt(s.zeta_per_stage) << '\n';
  });
}

// ---------------------------------------------------------------- commands

struct SolveArgs {
  std::string scenario;
  double gamma_h = 0.0;
  double gamma_e = 0.0;
  std::string out = "out";
  bool full_adversary = false;
  std::optional<int> x0;
  std::string x0_list;
};

int cmd_validate(const std::string& path) {
  const ScenarioFile sc = load_scenario(path);
  if (sc.finite)
    std::cout << "valid finite scenario '" << sc.name << "': n_states=" << sc.finite->n_states()
              << " n_inputs=" << sc.finite->n_inputs() << " n_dist=" << sc.finite->n_dist()
              << " horizon=" << sc.finite->horizon()
              << " layout=" << to_string(sc.finite->layout()) << '\n';
  else
    std::cout << "valid lq scenario '" << sc.name << "': n_x=" << sc.lq->n_x()
              << " n_u=" << sc.lq->n_u() << " n_w=" << sc.lq->n_w() << " horizon="
              << (sc.lq->horizon() ? std::to_string(*sc.lq->horizon()) : "infinite") << '\n';
  return kExitOk;
}

int cmd_solve(const SolveArgs& a) {
  const ScenarioFile sc = load_scenario(a.scenario);
  const Penalties pen(a.gamma_h, a.gamma_e);
  const fs::path out(a.out);
  if (sc.finite) {
    const SolveResult r = solve_backward(*sc.finite, pen, {a.full_adversary});
    write_finite_solution(out, r);
    const int x0 = finite_x0(sc, a.x0);
    const auto j0 = r.stage_values(0);
    std::cout << "J0(x0=" << x0 << ")=" << fmt(r.value(0, x0))
              << " J0_min=" << fmt(*std::min_element(j0.begin(), j0.end()))
              << " J0_max=" << fmt(*std::max_element(j0.begin(), j0.end()))
              << " policy_hash=" << hex64(policy_hash(r)) << '\n';
    return kExitOk;
  }
  const Eigen::VectorXd x0 = lq_point(a.x0_list, sc.lq->n_x());
  if (sc.lq->infinite_horizon()) {
    const InfiniteHorizonSolution s = solve_infinite_horizon(*sc.lq, pen);
    write_lq_infinite(out, *sc.lq, s);
    std::cout << "P_bar x0 quadratic=" << fmt(x0.dot(s.p * x0)) << " iterations=" << s.iterations
              << " gain_hash=" << hex64(gain_hash({s.gain})) << '\n';
    return kExitOk;
  }
  const LqSolution s = solve_finite_horizon(*sc.lq, pen);
  write_lq_solution(out, *sc.lq, s);
  std::cout << "J0(x0)=" << fmt(s.value(0, x0)) << " zeta0=" << fmt(s.zetas[0])
            << " gain_hash=" << hex64(gain_hash(s.gains)) << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string scenario;
  std::string gamma_h = "0";
  std::string gamma_e = "0";
  std::string out = "out";
  std::optional<int> x0;
  std::string x0_list;
};

int cmd_sweep(const SweepArgs& a) {
  const ScenarioFile sc = load_scenario(a.scenario);
  const auto ghs = parse_list(a.gamma_h, "--gamma-h");
  const auto ges = parse_list(a.gamma_e, "--gamma-e");
  const fs::path out(a.out);
  ensure_dir(out);

  std::optional<SolveResult> reference;
  if (sc.finite) reference = solve_backward(*sc.finite, Penalties(0, 0));

  std::ostringstream summary;
  summary << "point gamma_h gamma_e J0 policy_hash hamming status\n";
  int point = 0;
  for (double gh : ghs)
    for (double ge : ges) {
      const fs::path dir = out / ("point_" + std::to_string(point));
      summary << point << ' ' << fmt(gh) << ' ' << fmt(ge) << ' ';
      try {
        const Penalties pen(gh, ge);
        if (sc.finite) {
          const SolveResult r = solve_backward(*sc.finite, pen);
          write_finite_solution(dir, r);
          long long hamming = 0;
          for (std::size_t i = 0; i < r.policy.size(); ++i) hamming += r.policy[i] != reference->policy[i];
          summary << fmt(r.value(0, finite_x0(sc, a.x0))) << ' ' << hex64(policy_hash(r)) << ' '
                  << hamming << " ok\n";
        } else if (sc.lq->infinite_horizon()) {
          const InfiniteHorizonSolution s = solve_infinite_horizon(*sc.lq, pen);
          write_lq_infinite(dir, *sc.lq, s);
          const Eigen::VectorXd x0 = lq_point(a.x0_list, sc.lq->n_x());
          summary << fmt(x0.dot(s.p * x0)) << ' ' << hex64(gain_hash({s.gain})) << " NA ok\n";
        } else {
          const LqSolution s = solve_finite_horizon(*sc.lq, pen);
          write_lq_solution(dir, *sc.lq, s);
          summary << fmt(s.value(0, lq_point(a.x0_list, sc.lq->n_x()))) << ' '
                  << hex64(gain_hash(s.gains)) << " NA ok\n";
        }
      } catch (const Error& e) {
        summary << "NA NA NA " << to_string(e.kind()) << '\n';
        std::cerr << e.machine_line() << '\n';
      }
      ++point;
    }
  write_file_atomic(out / "summary.txt", [&](std::ostream& os) { os << summary.str(); });
  std::cout << summary.str();
  return kExitOk;
}

struct SimulateArgs {
  std::string scenario;
  std::string gamma_h;
  std::string gamma_e;
  std::string out = "out";
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> x0;
  std::string model;
  bool keep_trajectories = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const ScenarioFile sc = load_scenario(a.scenario);
  if (!sc.finite) throw Error(ErrorKind::InvalidArgument, "simulate needs a finite scenario");
  std::vector<Penalties> pairs;
  if (!a.gamma_h.empty() || !a.gamma_e.empty()) {
    const auto ghs = parse_list(a.gamma_h.empty() ? "0" : a.gamma_h, "--gamma-h");
    const auto ges = parse_list(a.gamma_e.empty() ? "0" : a.gamma_e, "--gamma-e");
    if (ghs.size() != ges.size())
      throw Error(ErrorKind::InvalidArgument, "--gamma-h and --gamma-e lists must pair up");
    for (std::size_t i = 0; i < ghs.size(); ++i) pairs.emplace_back(ghs[i], ges[i]);
  } else {
    pairs = sc.penalties;
  }
  if (pairs.empty()) throw Error(ErrorKind::InvalidArgument, "no penalty pairs given");

  const RolloutDefaults defaults = sc.rollout.value_or(RolloutDefaults{});
  RolloutSpec spec;
  spec.n_rollouts = a.n.value_or(defaults.n_rollouts);
  spec.seed = a.seed.value_or(defaults.seed);
  spec.initial_state = a.x0.value_or(defaults.initial_state);
  spec.model = defaults.model;
  if (a.model == "adversarial") spec.model = DisturbanceModel::Adversarial;
  else if (a.model == "empirical") spec.model = DisturbanceModel::Empirical;
  else if (!a.model.empty()) throw Error(ErrorKind::InvalidArgument, "unknown --model " + a.model);

  const fs::path out(a.out);
  ensure_dir(out);
  const StateMap map = sc.units.state.value_or(StateMap{});
  std::ostringstream summary;
  summary << "pair gamma_h gamma_e J0 mean_cost cost_std std_error\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SolveResult r = solve_backward(*sc.finite, pairs[i]);
    RolloutSpec s = spec;
    if (a.keep_trajectories) {
      s.keep_trajectories = true;
      s.spill_threshold = 0;
      s.spill_path = out / ("trajectories_" + std::to_string(i) + ".txt");
    }
    const RolloutOutput o = rollout(*sc.finite, r, s, map);
    write_file_atomic(out / ("stats_" + std::to_string(i) + ".txt"),
                      [&](std::ostream& os) { write_stats_table(os, o.stats); });
    summary << i << ' ' << fmt(pairs[i].gamma_h()) << ' ' << fmt(pairs[i].gamma_e()) << ' '
            << fmt(r.value(0, s.initial_state)) << ' ' << fmt(o.stats.mean_cost) << ' '
            << fmt(o.stats.cost_std) << ' ' << fmt(o.stats.cost_std_error) << '\n';
  }
  write_file_atomic(out / "summary.txt", [&](std::ostream& os) { os << summary.str(); });
  std::cout << summary.str();
  return kExitOk;
}

// ---------------------------------------------------------------- verify

class Checks {
 public:
  void record(const std::string& name, bool ok, double observed, double expected, double tol) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << " observed=" << fmt(observed)
              << " expected=" << fmt(expected) << " tol=" << fmt(tol) << '\n';
    failed_ += ok ? 0 : 1;
    ++total_;
  }
  int exit_code() const {
    std::cout << (total_ - failed_) << "/" << total_ << " checks passed\n";
    return failed_ == 0 ? kExitOk : kExitVerifyFailed;
  }

 private:
  int failed_ = 0;
  int total_ = 0;
};

LqSystem scalar_benchmark(double r, std::optional<int> horizon) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  return LqSystem::create({one, one, one, one, r * one, one, horizon});
}

struct VerifyArgs {
  std::string scenario;
  std::string suite;
  std::uint64_t seed = 1;
  std::optional<double> gamma_h;
  std::optional<double> gamma_e;
  double factor = 1.1;
  int instances = 20;
};

int verify_simplex(const VerifyArgs& a, const std::optional<ScenarioFile>& sc) {
  Checks checks;
  constexpr double kStep = 0.001, kTol = 1e-3;
  auto check = [&](const std::string& name, std::span<const double> r, std::span<const double> j,
                   const Penalties& pen) {
    std::vector<double> alphas(r.size());
    for (std::size_t w = 0; w < r.size(); ++w)
      alphas[w] = pen.gamma_h() == 0.0 ? j[w]
                  : r[w] > 0.0         ? pen.gamma_h() * std::log(r[w]) + j[w]
                                       : -std::numeric_limits<double>::infinity();
    const double q = q_value(alphas, pen);
    const double best = oracle::simplex_search(r, j, pen, kStep).best_value;
    checks.record(name, best <= q + 1e-9 && q - best <= kTol, best, q, kTol);
  };
  if (sc) {
    if (!sc->finite) throw Error(ErrorKind::InvalidArgument, "simplex suite needs a finite scenario");
    const FiniteSystem& sys = *sc->finite;
    if (sys.n_dist() > 4) throw Error(ErrorKind::DimensionTooLarge, "simplex suite needs n_dist <= 4");
    const Penalties pen(a.gamma_h.value_or(1.0), a.gamma_e.value_or(1.0));
    std::vector<double> terminal(sys.spec().terminal_cost);
    const int k = sys.horizon() - 1;
    int count = 0;
    for (int x = 0; x < sys.n_states() && count < a.instances; ++x)
      for (int u = 0; u < sys.n_inputs() && count < a.instances; ++u, ++count) {
        std::vector<double> j;
        for (auto t : sys.next_row(x, u)) j.push_back(terminal[static_cast<std::size_t>(t)]);
        check("simplex[x=" + std::to_string(x) + ",u=" + std::to_string(u) + "]",
              sys.empirical(k, x, u), j, pen);
      }
    return checks.exit_code();
  }
  const double grid[] = {0.5, 1.0, 5.0};
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (int i = 0; i < a.instances; ++i) {
    const auto r = random_distribution(a.seed * 1000003ULL + static_cast<std::uint64_t>(i), 3);
    std::vector<double> j(3);
    for (auto& v : j) v = unif(rng);
    const Penalties pen(grid[i % 3], grid[(i / 3) % 3]);
    check("simplex[" + std::to_string(i) + "]", r, j, pen);
  }
  return checks.exit_code();
}

int verify_quadrature(const VerifyArgs& a, const std::optional<ScenarioFile>& sc) {
  Checks checks;
  constexpr double kTol = 1e-6;
  const LqSystem lq = sc ? (sc->lq ? *sc->lq : throw Error(ErrorKind::InvalidArgument,
                                                           "quadrature suite needs an lq scenario"))
                         : scalar_benchmark(1.0, 1);
  const Penalties pen(a.gamma_h.value_or(4.0), a.gamma_e.value_or(1.0));
  const Eigen::MatrixXd p_next = lq.Q_h();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const Eigen::VectorXd x = Eigen::VectorXd::Constant(lq.n_x(), -3.0 + 1.5 * i);
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(lq.n_u(), -3.0 + 1.5 * j);
      const double closed = closed_form_q(lq, pen, p_next, 0.0, x, u);
      const double quad = oracle::gaussian_quadrature_q(lq, p_next, 0.0, x, u, pen);
      checks.record("quadrature[x=" + fmt(x[0]) + ",u=" + fmt(u[0]) + "]",
                    std::abs(closed - quad) <= kTol, quad, closed, kTol);
    }
  return checks.exit_code();
}

int verify_limits(const VerifyArgs& a, const std::optional<ScenarioFile>& sc) {
  Checks checks;
  RandomSystemOptions opt;
  opt.n_states = 5;
  opt.shared_modal_mass = true;
  const FiniteSystem sys = sc ? (sc->finite ? *sc->finite
                                            : throw Error(ErrorKind::InvalidArgument,
                                                          "limits suite needs a finite scenario"))
                              : random_finite_system(a.seed, opt);
  auto max_diff = [](const SolveResult& x, const SolveResult& y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) d = std::max(d, std::abs(x.values[i] - y.values[i]));
    return d;
  };
  const double d_rs = max_diff(solve_backward(sys, Penalties(1, 1)), solve_limit(sys, LimitRegime::risk_sensitive(1.0)));
  checks.record("limits[risk_sensitive gamma_E=gamma_H=1]", d_rs <= 1e-10, d_rs, 0.0, 1e-10);
  const double d_sdp = max_diff(solve_backward(sys, Penalties(1e6, 1e6)), solve_limit(sys, LimitRegime::sdp()));
  checks.record("limits[sdp gamma_E=gamma_H=1e6]", d_sdp <= 1e-4, d_sdp, 0.0, 1e-4);
  const double d_mm = max_diff(solve_backward(sys, Penalties(0, 0)), solve_limit(sys, LimitRegime::minimax()));
  checks.record("limits[minimax gamma_E=gamma_H=0]", d_mm <= 1e-10, d_mm, 0.0, 1e-10);
  const SolveResult ml = solve_backward(sys, Penalties(1e9, 0));
  const SolveResult ml_ref = solve_limit(sys, LimitRegime::ml_ce());
  long long mismatches = 0;
  for (std::size_t i = 0; i < ml.policy.size(); ++i) mismatches += ml.policy[i] != ml_ref.policy[i];
  checks.record("limits[ml_ce gamma_E=0 gamma_H=1e9 policy mismatches]", mismatches == 0,
                static_cast<double>(mismatches), 0.0, 0.0);
  return checks.exit_code();
}

int verify_attenuation(const VerifyArgs& a, const std::optional<ScenarioFile>& sc) {
  Checks checks;
  const LqSystem lq = sc ? (sc->lq ? sc->lq->with_horizon(std::nullopt)
                                   : throw Error(ErrorKind::InvalidArgument,
                                                 "attenuation suite needs an lq scenario"))
                         : scalar_benchmark(0.1, std::nullopt);
  const CriticalGamma crit = critical_gamma_h(lq, std::nullopt);
  const double gh = a.factor * crit.gamma_h;
  const InfiniteHorizonSolution sol = solve_infinite_horizon(lq, Penalties(gh, 0.0));
  AttenuationSpec spec;
  spec.seed = a.seed;
  spec.adversary_map = sol.adversary_mean_map;
  const AttenuationReport rep = certify_attenuation(lq, sol.gain, std::sqrt(gh / 2.0), spec);
  std::cout << "critical gamma_H=" << fmt(crit.gamma_h) << " design gamma_H=" << fmt(gh)
            << " spectral_radius=" << fmt(rep.spectral_radius) << '\n';
  checks.record("attenuation[ratio <= gamma^2]", rep.pass, rep.max_ratio, gh / 2.0, 1e-6);
  return checks.exit_code();
}

int cmd_verify(const VerifyArgs& a) {
  std::optional<ScenarioFile> sc;
  if (!a.scenario.empty()) sc = load_scenario(a.scenario);
  if (a.suite == "simplex") return verify_simplex(a, sc);
  if (a.suite == "quadrature") return verify_quadrature(a, sc);
  if (a.suite == "limits") return verify_limits(a, sc);
  if (a.suite == "attenuation") return verify_attenuation(a, sc);
  throw Error(ErrorKind::InvalidArgument, "unknown suite " + a.suite);
}

// ---------------------------------------------------------------- export

int cmd_export(const std::string& name, const std::string& out) {
  const fs::path dir(out);
  ensure_dir(dir);
  const bool all = name == "all";
  bool any = false;
  if (all || name == "irrigation") {
    save_scenario(dir / "irrigation.json", irrigation_scenario(), {true});
    any = true;
  }
  if (all || name == "fig3") {
    ScenarioFile sc;
    sc.name = "fig3";
    sc.finite = build_fig3_scenario();
    sc.units.state = StateMap{0.0, 100.0};
    sc.penalties = {Penalties(0, 0), Penalties(1e6, 1e6)};
    save_scenario(dir / "fig3.json", sc, {true});
    any = true;
  }
  if (all || name == "fig4") {
    ScenarioFile sc;
    sc.name = "fig4";
    sc.finite = build_fig4_scenario();
    sc.penalties = {Penalties(0, 0), Penalties(1, 0), Penalties(100, 0), Penalties(1e6, 1e6)};
    save_scenario(dir / "fig4.json", sc, {true});
    any = true;
  }
  if (all || name == "scalar-lq") {
    ScenarioFile sc;
    sc.name = "scalar-lq";
    sc.lq = scalar_benchmark(1.0, 1);
    sc.penalties = {Penalties(4, 1)};
    save_scenario(dir / "scalar_lq.json", sc);
    any = true;
  }
  if (all || name == "scalar-lq-inf") {
    ScenarioFile sc;
    sc.name = "scalar-lq-inf";
    sc.lq = scalar_benchmark(0.1, std::nullopt);
    save_scenario(dir / "scalar_lq_inf.json", sc);
    any = true;
  }
  if (!any) throw Error(ErrorKind::InvalidArgument, "unknown scenario name " + name);
  return kExitOk;
}

void apply_thread_env() {
  if (const char* env = std::getenv("MINSOFTMAX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  CLI::App app{"minsoftmax: robust dynamic programming with likelihood and entropy penalties"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (overrides MINSOFTMAX_THREADS)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Load and validate a scenario");
  validate->add_option("scenario", validate_path)->required();

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve one (gamma_H, gamma_E) pair");
  solve->add_option("scenario", solve_args.scenario)->required();
  solve->add_option("--gamma-h", solve_args.gamma_h, "likelihood factor");
  solve->add_option("--gamma-e", solve_args.gamma_e, "temperature");
  solve->add_option("--out", solve_args.out, "output directory");
  solve->add_flag("--full-adversary", solve_args.full_adversary, "store p* for every input");
  solve->add_option("--x0", solve_args.x0, "finite initial state for the summary");
  solve->add_option("--x0-vector", solve_args.x0_list, "lq initial state, comma list");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Solve over a (gamma_H, gamma_E) grid");
  sweep->add_option("scenario", sweep_args.scenario)->required();
  sweep->add_option("--gamma-h", sweep_args.gamma_h, "comma list");
  sweep->add_option("--gamma-e", sweep_args.gamma_e, "comma list");
  sweep->add_option("--out", sweep_args.out, "output directory");
  sweep->add_option("--x0", sweep_args.x0, "finite initial state");
  sweep->add_option("--x0-vector", sweep_args.x0_list, "lq initial state, comma list");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Solve and roll out penalty pairs");
  simulate->add_option("scenario", sim_args.scenario)->required();
  simulate->add_option("--gamma-h", sim_args.gamma_h, "comma list, paired with --gamma-e");
  simulate->add_option("--gamma-e", sim_args.gamma_e, "comma list, paired with --gamma-h");
  simulate->add_option("--out", sim_args.out, "output directory");
  simulate->add_option("--n", sim_args.n, "number of rollouts");
  simulate->add_option("--seed", sim_args.seed, "RNG seed");
  simulate->add_option("--x0", sim_args.x0, "initial state index");
  simulate->add_option("--model", sim_args.model, "empirical | adversarial");
  simulate->add_flag("--keep-trajectories", sim_args.keep_trajectories, "write raw trajectories");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Run an oracle suite");
  verify->add_option("scenario", verify_args.scenario, "optional scenario; random instance otherwise");
  verify->add_option("--suite", verify_args.suite, "simplex | quadrature | limits | attenuation")->required();
  verify->add_option("--seed", verify_args.seed, "seed for random instances");
  verify->add_option("--gamma-h", verify_args.gamma_h, "likelihood factor");
  verify->add_option("--gamma-e", verify_args.gamma_e, "temperature");
  verify->add_option("--factor", verify_args.factor, "attenuation: design gamma_H / critical");
  verify->add_option("--instances", verify_args.instances, "simplex: number of instances");

  std::string export_name = "all", export_out = "data";
  auto* exp = app.add_subcommand("export", "Write the bundled scenarios as data files");
  exp->add_option("name", export_name, "irrigation | fig3 | fig4 | scalar-lq | scalar-lq-inf | all");
  exp->add_option("--out", export_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*solve) return cmd_solve(solve_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*simulate) return cmd_simulate(sim_args);
    if (*verify) return cmd_verify(verify_args);
    if (*exp) return cmd_export(export_name, export_out);
  } catch (const ValidationFailure& e) {
    std::cerr << e.report().summary() << '\n' << e.machine_line() << '\n';
    return kExitInvalid;
  } catch (const Error& e) {
    std::cerr << e.machine_line() << '\n';
    return e.kind() == ErrorKind::MBelowCritical ? kExitInfeasible : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error kind=Internal message=\"" << e.what() << "\"\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
