#include "minsoftmax/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace minsoftmax {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kMatrixTol = 1e-10;
constexpr std::size_t kMaxReportedViolations = 64;

void add(ValidationReport& report, ErrorKind kind, std::string field,
         std::vector<std::int64_t> index, std::string detail) {
  report.violations.push_back({kind, std::move(field), std::move(index), std::move(detail)});
}

}  // namespace

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  std::size_t shown = 0;
  for (const auto& v : violations) {
    if (shown++ == kMaxReportedViolations) {
      os << "; ...";
      break;
    }
    os << "; " << to_string(v.kind) << " at " << v.field;
    if (!v.index.empty()) {
      os << '[';
      for (std::size_t i = 0; i < v.index.size(); ++i) os << (i ? "," : "") << v.index[i];
      os << ']';
    }
    if (!v.detail.empty()) os << " (" << v.detail << ')';
  }
  return os.str();
}

ValidationFailure::ValidationFailure(ValidationReport report)
    : Error(ErrorKind::ValidationError, report.summary()), report_(std::move(report)) {}

Penalties::Penalties(double gamma_h, double gamma_e) : gamma_h_(gamma_h), gamma_e_(gamma_e) {
  if (!std::isfinite(gamma_h) || gamma_h < 0.0 || !std::isfinite(gamma_e) || gamma_e < 0.0) {
    std::ostringstream os;
    os << "penalties must be finite and nonnegative (gamma_h=" << gamma_h
       << ", gamma_e=" << gamma_e << ")";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

std::string_view to_string(EmpiricalLayout layout) noexcept {
  switch (layout) {
    case EmpiricalLayout::Shared: return "shared";
    case EmpiricalLayout::PerPair: return "per_pair";
    case EmpiricalLayout::PerStage: return "per_stage";
  }
  return "unknown";
}

std::size_t FiniteSystemSpec::empirical_rows() const noexcept {
  const auto pairs = static_cast<std::size_t>(std::max(n_states, 0)) *
                     static_cast<std::size_t>(std::max(n_inputs, 0));
  switch (layout) {
    case EmpiricalLayout::Shared: return 1;
    case EmpiricalLayout::PerPair: return pairs;
    case EmpiricalLayout::PerStage: return pairs * static_cast<std::size_t>(std::max(horizon, 0));
  }
  return 0;
}

ValidationReport validate_finite_system(const FiniteSystemSpec& s) {
  ValidationReport report;
  if (s.n_states <= 0) add(report, ErrorKind::InvalidArgument, "n_states", {}, "must be positive");
  if (s.n_inputs <= 0) add(report, ErrorKind::InvalidArgument, "n_inputs", {}, "must be positive");
  if (s.n_dist <= 0) add(report, ErrorKind::InvalidArgument, "n_dist", {}, "must be positive");
  if (s.horizon <= 0) add(report, ErrorKind::InvalidArgument, "horizon", {}, "must be positive");
  if (!report.ok()) return report;

  const auto ns = static_cast<std::size_t>(s.n_states);
  const auto nu = static_cast<std::size_t>(s.n_inputs);
  const auto nw = static_cast<std::size_t>(s.n_dist);

  auto check_size = [&](const char* field, std::size_t actual, std::size_t expected) {
    if (actual == expected) return true;
    add(report, ErrorKind::ShapeMismatch, field, {},
        "expected " + std::to_string(expected) + " entries, got " + std::to_string(actual));
    return false;
  };

  if (check_size("transition", s.transition.size(), ns * nu * nw)) {
    for (std::size_t x = 0; x < ns; ++x)
      for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t w = 0; w < nw; ++w) {
          const auto t = s.transition[(x * nu + u) * nw + w];
          if (t < 0 || t >= s.n_states)
            add(report, ErrorKind::OutOfRangeTransition, "transition",
                {std::int64_t(x), std::int64_t(u), std::int64_t(w)},
                "target " + std::to_string(t) + " outside [0, " + std::to_string(s.n_states) + ")");
        }
  }

  if (check_size("stage_cost", s.stage_cost.size(), ns * nu)) {
    for (std::size_t x = 0; x < ns; ++x)
      for (std::size_t u = 0; u < nu; ++u)
        if (!std::isfinite(s.stage_cost[x * nu + u]))
          add(report, ErrorKind::NonFiniteCost, "stage_cost", {std::int64_t(x), std::int64_t(u)}, "");
  }

  if (check_size("terminal_cost", s.terminal_cost.size(), ns)) {
    for (std::size_t x = 0; x < ns; ++x)
      if (!std::isfinite(s.terminal_cost[x]))
        add(report, ErrorKind::NonFiniteCost, "terminal_cost", {std::int64_t(x)}, "");
  }

  const std::size_t rows = s.empirical_rows();
  if (check_size("empirical", s.empirical.size(), rows * nw)) {
    for (std::size_t row = 0; row < rows; ++row) {
      double sum = 0.0;
      bool bad_entry = false;
      for (std::size_t w = 0; w < nw; ++w) {
        const double p = s.empirical[row * nw + w];
        if (!std::isfinite(p) || p < 0.0) bad_entry = true;
        sum += p;
      }
      if (bad_entry || std::abs(sum - 1.0) > kRowSumTol) {
        // Index the row by its natural tuple for the layout.
        std::vector<std::int64_t> index;
        switch (s.layout) {
          case EmpiricalLayout::Shared: break;
          case EmpiricalLayout::PerPair:
            index = {std::int64_t(row / nu), std::int64_t(row % nu)};
            break;
          case EmpiricalLayout::PerStage:
            index = {std::int64_t(row / (ns * nu)), std::int64_t((row / nu) % ns),
                     std::int64_t(row % nu)};
            break;
        }
        std::ostringstream os;
        os.precision(17);
        if (bad_entry)
          os << "negative or non-finite probability";
        else
          os << "row sums to " << sum;
        add(report, ErrorKind::NonStochasticRow, "empirical", std::move(index), os.str());
      }
    }
  }
  return report;
}

FiniteSystem::FiniteSystem(FiniteSystemSpec spec) : d_(std::move(spec)) {
  const auto nw = static_cast<std::size_t>(d_.n_dist);
  const std::size_t rows = d_.empirical_rows();
  for (std::size_t row = 0; row < rows; ++row) {
    double* p = d_.empirical.data() + row * nw;
    double sum = 0.0;
    for (std::size_t w = 0; w < nw; ++w) sum += p[w];
    // Rows already normalized up to summation rounding are kept bit for bit.
    if (std::abs(sum - 1.0) <= 4.0 * static_cast<double>(nw) * std::numeric_limits<double>::epsilon()) continue;
    for (std::size_t w = 0; w < nw; ++w) p[w] /= sum;
  }
  log_r_.resize(d_.empirical.size());
  for (std::size_t i = 0; i < d_.empirical.size(); ++i)
    log_r_[i] = d_.empirical[i] > 0.0 ? std::log(d_.empirical[i])
                                      : -std::numeric_limits<double>::infinity();
}

FiniteSystem FiniteSystem::create(FiniteSystemSpec spec) {
  auto report = validate_finite_system(spec);
  if (!report.ok()) throw ValidationFailure(std::move(report));
  return FiniteSystem(std::move(spec));
}

FiniteSystem FiniteSystem::with_horizon(int horizon) const {
  FiniteSystemSpec spec = d_;
  if (spec.layout == EmpiricalLayout::PerStage && horizon != spec.horizon) {
    if (horizon > spec.horizon || horizon <= 0)
      throw Error(ErrorKind::InvalidArgument,
                  "per-stage empirical table has " + std::to_string(spec.horizon) +
                      " stages; cannot use horizon " + std::to_string(horizon));
    spec.empirical.resize(static_cast<std::size_t>(horizon) * spec.n_states * spec.n_inputs *
                          spec.n_dist);
  }
  spec.horizon = horizon;
  return create(std::move(spec));
}

std::size_t FiniteSystem::row_offset(int k, int x, int u) const noexcept {
  const auto nw = static_cast<std::size_t>(d_.n_dist);
  switch (d_.layout) {
    case EmpiricalLayout::Shared: return 0;
    case EmpiricalLayout::PerPair:
      return (static_cast<std::size_t>(x) * d_.n_inputs + u) * nw;
    case EmpiricalLayout::PerStage:
      return ((static_cast<std::size_t>(k) * d_.n_states + x) * d_.n_inputs + u) * nw;
  }
  return 0;
}

// --------------------------------------------------------------------------

namespace {

void check_matrix(ValidationReport& report, const char* field, const Eigen::MatrixXd& m,
                  bool require_pd) {
  if (!m.allFinite()) {
    add(report, ErrorKind::NonFiniteCost, field, {}, "non-finite entry");
    return;
  }
  if (m.rows() != m.cols()) return;  // shape reported separately
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kMatrixTol) {
    add(report, ErrorKind::NonSymmetricMatrix, field, {},
        "max |M - M'| = " + std::to_string(asym));
    return;
  }
  if (m.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (require_pd && min_eig <= kMatrixTol)
    add(report, ErrorKind::NotPositiveDefinite, field, {},
        "min eigenvalue " + std::to_string(min_eig));
  else if (!require_pd && min_eig < -kMatrixTol)
    add(report, ErrorKind::NotPositiveSemidefinite, field, {},
        "min eigenvalue " + std::to_string(min_eig));
}

}  // namespace

ValidationReport validate_lq_system(const LqSystemSpec& s) {
  ValidationReport report;
  const auto n = s.A.rows();
  auto shape = [&](const char* field, const Eigen::MatrixXd& m, Eigen::Index rows,
                   Eigen::Index cols) {
    if (m.rows() == rows && (cols < 0 || m.cols() == cols)) return;
    add(report, ErrorKind::ShapeMismatch, field, {m.rows(), m.cols()},
        "expected " + std::to_string(rows) + "x" + (cols < 0 ? std::string("*") : std::to_string(cols)));
  };
  if (n == 0) add(report, ErrorKind::ShapeMismatch, "A", {}, "empty state dimension");
  shape("A", s.A, n, n);
  shape("B", s.B, n, -1);
  shape("D", s.D, n, -1);
  shape("Q", s.Q, n, n);
  shape("Q_h", s.Q_h, n, n);
  shape("R", s.R, s.B.cols(), s.B.cols());
  if (s.B.cols() == 0) add(report, ErrorKind::ShapeMismatch, "B", {}, "no inputs");
  if (s.D.cols() == 0) add(report, ErrorKind::ShapeMismatch, "D", {}, "no disturbance channels");
  if (!s.A.allFinite()) add(report, ErrorKind::NonFiniteCost, "A", {}, "non-finite entry");
  if (!s.B.allFinite()) add(report, ErrorKind::NonFiniteCost, "B", {}, "non-finite entry");
  if (!s.D.allFinite()) add(report, ErrorKind::NonFiniteCost, "D", {}, "non-finite entry");
  check_matrix(report, "Q", s.Q, false);
  check_matrix(report, "Q_h", s.Q_h, false);
  check_matrix(report, "R", s.R, true);
  if (s.horizon && *s.horizon <= 0)
    add(report, ErrorKind::InvalidArgument, "horizon", {}, "must be positive or infinite");
  return report;
}

LqSystem LqSystem::create(LqSystemSpec spec) {
  auto report = validate_lq_system(spec);
  if (!report.ok()) throw ValidationFailure(std::move(report));
  // Exact symmetry downstream.
  spec.Q = 0.5 * (spec.Q + spec.Q.transpose()).eval();
  spec.Q_h = 0.5 * (spec.Q_h + spec.Q_h.transpose()).eval();
  spec.R = 0.5 * (spec.R + spec.R.transpose()).eval();
  return LqSystem(std::move(spec));
}

LqSystem LqSystem::with_horizon(std::optional<int> horizon) const {
  LqSystemSpec spec = d_;
  spec.horizon = horizon;
  return create(std::move(spec));
}

double LqSolution::value(int k, const Eigen::VectorXd& x) const {
  return x.dot(p_mats.at(static_cast<std::size_t>(k)) * x) + zetas.at(static_cast<std::size_t>(k));
}

}  // namespace minsoftmax
