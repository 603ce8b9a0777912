#include "minsoftmax/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "minsoftmax/io.hpp"

namespace minsoftmax {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ParseError, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(path + "." + key, "missing field");
  return *it;
}

template <class T>
T as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    parse_fail(path, e.what());
  }
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) parse_fail(path, "expected an integer");
  return j.get<int>();
}

double as_real(const json& j, const std::string& path) {
  if (!j.is_number()) parse_fail(path, "expected a number");
  return j.get<double>();
}

std::vector<double> as_reals(const json& j, const std::string& path) {
  if (!j.is_array()) parse_fail(path, "expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_real(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) parse_fail(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) parse_fail(rp, "ragged matrix row");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_real(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

EmpiricalLayout parse_layout(const std::string& s, const std::string& path) {
  if (s == "shared") return EmpiricalLayout::Shared;
  if (s == "per_pair") return EmpiricalLayout::PerPair;
  if (s == "per_stage") return EmpiricalLayout::PerStage;
  parse_fail(path, "unknown layout '" + s + "'");
}

DisturbanceModel parse_model(const std::string& s, const std::string& path) {
  if (s == "empirical") return DisturbanceModel::Empirical;
  if (s == "adversarial") return DisturbanceModel::Adversarial;
  parse_fail(path, "unknown rollout model '" + s + "'");
}

std::string_view model_name(DisturbanceModel m) {
  switch (m) {
    case DisturbanceModel::Empirical: return "empirical";
    case DisturbanceModel::Adversarial: return "adversarial";
    case DisturbanceModel::FixedTable: return "fixed_table";
  }
  return "empirical";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) parse_fail(where, "bad number '" + s + "'");
  return v;
}

// Reads a side table whose records are ordered by `index_names` (row-major)
// and carry `width` values each. `extents` gives the range of every index.
template <class T>
std::vector<T> read_side_table(const std::filesystem::path& file,
                               const std::vector<std::string>& index_names,
                               const std::vector<int>& extents, int width) {
  std::ifstream is(file);
  if (!is) parse_fail(file.string(), "cannot open side file");
  std::string line;
  if (!std::getline(is, line)) parse_fail(file.string(), "empty side file");
  const auto header = split_csv(line);
  if (header.size() != index_names.size() + static_cast<std::size_t>(width))
    parse_fail(file.string() + ":1", "expected " + std::to_string(index_names.size()) +
                                         " index columns and " + std::to_string(width) +
                                         " value columns");
  for (std::size_t i = 0; i < index_names.size(); ++i)
    if (header[i] != index_names[i])
      parse_fail(file.string() + ":1", "expected index column '" + index_names[i] + "'");

  std::size_t records = 1;
  for (int e : extents) records *= static_cast<std::size_t>(e);
  std::vector<T> out;
  out.reserve(records * static_cast<std::size_t>(width));
  std::vector<int> expect(index_names.size(), 0);
  for (std::size_t rec = 0; rec < records; ++rec) {
    const std::string where = file.string() + ":" + std::to_string(rec + 2);
    if (!std::getline(is, line)) parse_fail(where, "missing record");
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) parse_fail(where, "wrong number of columns");
    for (std::size_t i = 0; i < index_names.size(); ++i)
      if (parse_number<int>(cells[i], where) != expect[i])
        parse_fail(where, "records must be ordered by (" + [&] {
          std::string s;
          for (const auto& n : index_names) s += (s.empty() ? "" : ",") + n;
          return s;
        }() + ")");
    for (std::size_t c = index_names.size(); c < cells.size(); ++c)
      out.push_back(parse_number<T>(cells[c], where));
    for (int i = static_cast<int>(expect.size()) - 1; i >= 0; --i) {
      if (++expect[static_cast<std::size_t>(i)] < extents[static_cast<std::size_t>(i)]) break;
      expect[static_cast<std::size_t>(i)] = 0;
    }
  }
  while (std::getline(is, line))
    if (!line.empty() && line != "\r") parse_fail(file.string(), "trailing records");
  return out;
}

template <class T>
void write_side_table(const std::filesystem::path& file, const std::vector<std::string>& index_names,
                      const std::vector<int>& extents, int width, const std::vector<T>& values) {
  write_file_atomic(file, [&](std::ostream& os) {
    for (const auto& n : index_names) os << n << ',';
    for (int w = 0; w < width; ++w) os << "w" << w << (w + 1 < width ? "," : "\n");
    std::vector<int> idx(index_names.size(), 0);
    const std::size_t records = values.size() / static_cast<std::size_t>(width);
    char buf[32];
    for (std::size_t rec = 0; rec < records; ++rec) {
      for (int i : idx) os << i << ',';
      for (int w = 0; w < width; ++w) {
        const T v = values[rec * static_cast<std::size_t>(width) + static_cast<std::size_t>(w)];
        if constexpr (std::is_floating_point_v<T>) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          os << buf;
        } else {
          os << v;
        }
        os << (w + 1 < width ? ',' : '\n');
      }
      for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) {
        if (++idx[static_cast<std::size_t>(i)] < extents[static_cast<std::size_t>(i)]) break;
        idx[static_cast<std::size_t>(i)] = 0;
      }
    }
  });
}

std::pair<std::vector<std::string>, std::vector<int>> layout_index(const FiniteSystemSpec& s) {
  switch (s.layout) {
    case EmpiricalLayout::Shared: return {{}, {}};
    case EmpiricalLayout::PerPair: return {{"x", "u"}, {s.n_states, s.n_inputs}};
    case EmpiricalLayout::PerStage:
      return {{"k", "x", "u"}, {s.horizon, s.n_states, s.n_inputs}};
  }
  return {{}, {}};
}

[[noreturn]] void rethrow_with_prefix(const ValidationFailure& f, const std::string& prefix) {
  ValidationReport report = f.report();
  for (auto& v : report.violations) v.field = prefix + "." + v.field;
  throw ValidationFailure(std::move(report));
}

FiniteSystem parse_finite(const json& j, const std::filesystem::path& dir) {
  const std::string p = "finite";
  FiniteSystemSpec s;
  s.n_states = as_int(field(j, "n_states", p), p + ".n_states");
  s.n_inputs = as_int(field(j, "n_inputs", p), p + ".n_inputs");
  s.n_dist = as_int(field(j, "n_dist", p), p + ".n_dist");
  s.horizon = as_int(field(j, "horizon", p), p + ".horizon");
  if (s.n_states <= 0 || s.n_inputs <= 0 || s.n_dist <= 0 || s.horizon <= 0) {
    ValidationReport rep;
    rep.violations.push_back(
        {ErrorKind::InvalidArgument, p + ".dimensions", {}, "all dimensions must be positive"});
    throw ValidationFailure(std::move(rep));
  }

  const json& t = field(j, "transition", p);
  if (t.is_object()) {
    const auto file = dir / as<std::string>(field(t, "file", p + ".transition"), p + ".transition.file");
    s.transition = read_side_table<std::int32_t>(file, {"x", "u"}, {s.n_states, s.n_inputs}, s.n_dist);
  } else {
    if (!t.is_array()) parse_fail(p + ".transition", "expected an array or {\"file\": ...}");
    s.transition.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      s.transition.push_back(as_int(t[i], p + ".transition[" + std::to_string(i) + "]"));
  }
  s.stage_cost = as_reals(field(j, "stage_cost", p), p + ".stage_cost");
  s.terminal_cost = as_reals(field(j, "terminal_cost", p), p + ".terminal_cost");

  const std::string ep = p + ".empirical";
  const json& e = field(j, "empirical", p);
  s.layout = parse_layout(as<std::string>(field(e, "layout", ep), ep + ".layout"), ep + ".layout");
  if (e.contains("file")) {
    const auto file = dir / as<std::string>(e["file"], ep + ".file");
    const auto [names, extents] = layout_index(s);
    s.empirical = read_side_table<double>(file, names, extents, s.n_dist);
  } else {
    const json& rows = field(e, "rows", ep);
    if (!rows.is_array()) parse_fail(ep + ".rows", "expected an array of rows");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto row = as_reals(rows[r], ep + ".rows[" + std::to_string(r) + "]");
      s.empirical.insert(s.empirical.end(), row.begin(), row.end());
    }
  }
  try {
    return FiniteSystem::create(std::move(s));
  } catch (const ValidationFailure& f) {
    rethrow_with_prefix(f, p);
  }
}

LqSystem parse_lq(const json& j) {
  const std::string p = "lq";
  LqSystemSpec s;
  s.A = as_matrix(field(j, "A", p), p + ".A");
  s.B = as_matrix(field(j, "B", p), p + ".B");
  s.D = as_matrix(field(j, "D", p), p + ".D");
  s.Q = as_matrix(field(j, "Q", p), p + ".Q");
  s.R = as_matrix(field(j, "R", p), p + ".R");
  s.Q_h = as_matrix(field(j, "Q_h", p), p + ".Q_h");
  if (j.contains("horizon") && !j["horizon"].is_null())
    s.horizon = as_int(j["horizon"], p + ".horizon");
  try {
    return LqSystem::create(std::move(s));
  } catch (const ValidationFailure& f) {
    rethrow_with_prefix(f, p);
  }
}

StateMap parse_map(const json& j, const std::string& path) {
  return {as_real(field(j, "offset", path), path + ".offset"),
          as_real(field(j, "slope", path), path + ".slope")};
}

json map_json(const StateMap& m) { return {{"offset", m.offset}, {"slope", m.slope}}; }

double normal_cdf(double z) {
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double irrigation_gx(int x, const StateMap& m) {
  if (x < 10) return 1200.0;
  const double s = m.offset + m.slope * x;
  return (s - 50.0) * (s - 50.0) / 100.0;
}

}  // namespace

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::ParseError, "cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    parse_fail(path.string(), e.what());
  }
  if (!j.is_object()) parse_fail(path.string(), "top level must be an object");

  ScenarioFile sc;
  sc.schema_version = as_int(field(j, "schema_version", "$"), "schema_version");
  if (sc.schema_version != 1)
    throw Error(ErrorKind::SchemaVersionUnsupported,
                "schema_version " + std::to_string(sc.schema_version) + " is not supported (expected 1)");
  if (j.contains("name")) sc.name = as<std::string>(j["name"], "name");
  const auto kind = as<std::string>(field(j, "kind", "$"), "kind");
  const auto dir = path.parent_path();
  if (kind == "finite")
    sc.finite = parse_finite(field(j, "finite", "$"), dir);
  else if (kind == "lq")
    sc.lq = parse_lq(field(j, "lq", "$"));
  else
    parse_fail("kind", "expected 'finite' or 'lq', got '" + kind + "'");

  if (j.contains("units")) {
    const json& u = j["units"];
    if (u.contains("state")) sc.units.state = parse_map(u["state"], "units.state");
    if (u.contains("input")) sc.units.input = parse_map(u["input"], "units.input");
    if (u.contains("disturbance"))
      sc.units.disturbance = parse_map(u["disturbance"], "units.disturbance");
  }
  if (j.contains("penalties")) {
    const json& pen = j["penalties"];
    if (!pen.is_array()) parse_fail("penalties", "expected an array of [gamma_h, gamma_e]");
    for (std::size_t i = 0; i < pen.size(); ++i) {
      const auto pair = as_reals(pen[i], "penalties[" + std::to_string(i) + "]");
      if (pair.size() != 2) parse_fail("penalties[" + std::to_string(i) + "]", "expected 2 values");
      try {
        sc.penalties.emplace_back(pair[0], pair[1]);
      } catch (const Error& e) {
        ValidationReport rep;
        rep.violations.push_back(
            {ErrorKind::InvalidArgument, "penalties", {static_cast<std::int64_t>(i)}, e.what()});
        throw ValidationFailure(std::move(rep));
      }
    }
  }
  if (j.contains("rollout")) {
    const json& r = j["rollout"];
    RolloutDefaults d;
    if (r.contains("n_rollouts")) d.n_rollouts = as_int(r["n_rollouts"], "rollout.n_rollouts");
    if (r.contains("seed")) d.seed = as<std::uint64_t>(r["seed"], "rollout.seed");
    if (r.contains("initial_state")) d.initial_state = as_int(r["initial_state"], "rollout.initial_state");
    if (r.contains("model"))
      d.model = parse_model(as<std::string>(r["model"], "rollout.model"), "rollout.model");
    if (d.n_rollouts < 1 || (sc.finite && (d.initial_state < 0 || d.initial_state >= sc.finite->n_states()))) {
      ValidationReport rep;
      rep.violations.push_back(
          {ErrorKind::InvalidArgument, "rollout", {}, "n_rollouts >= 1 and a valid initial_state required"});
      throw ValidationFailure(std::move(rep));
    }
    sc.rollout = d;
  }
  return sc;
}

void save_scenario(const std::filesystem::path& path, const ScenarioFile& sc,
                   const SaveOptions& options) {
  json j;
  j["schema_version"] = 1;
  if (!sc.name.empty()) j["name"] = sc.name;
  const std::string stem = path.stem().string();
  const auto dir = path.parent_path();

  if (sc.finite) {
    const FiniteSystemSpec& s = sc.finite->spec();
    j["kind"] = "finite";
    json f;
    f["n_states"] = s.n_states;
    f["n_inputs"] = s.n_inputs;
    f["n_dist"] = s.n_dist;
    f["horizon"] = s.horizon;
    if (options.side_files) {
      const std::string name = stem + ".transition.csv";
      write_side_table(dir / name, {"x", "u"}, {s.n_states, s.n_inputs}, s.n_dist, s.transition);
      f["transition"] = {{"file", name}};
    } else {
      f["transition"] = s.transition;
    }
    f["stage_cost"] = s.stage_cost;
    f["terminal_cost"] = s.terminal_cost;
    json e;
    e["layout"] = std::string(to_string(s.layout));
    if (options.side_files && s.layout != EmpiricalLayout::Shared) {
      const std::string name = stem + ".empirical.csv";
      const auto [names, extents] = layout_index(s);
      write_side_table(dir / name, names, extents, s.n_dist, s.empirical);
      e["file"] = name;
    } else {
      json rows = json::array();
      const auto nw = static_cast<std::size_t>(s.n_dist);
      for (std::size_t r = 0; r < s.empirical.size() / nw; ++r)
        rows.push_back(std::vector<double>(s.empirical.begin() + static_cast<std::ptrdiff_t>(r * nw),
                                           s.empirical.begin() + static_cast<std::ptrdiff_t>((r + 1) * nw)));
      e["rows"] = std::move(rows);
    }
    f["empirical"] = std::move(e);
    j["finite"] = std::move(f);
  } else if (sc.lq) {
    j["kind"] = "lq";
    json l;
    l["A"] = matrix_json(sc.lq->A());
    l["B"] = matrix_json(sc.lq->B());
    l["D"] = matrix_json(sc.lq->D());
    l["Q"] = matrix_json(sc.lq->Q());
    l["R"] = matrix_json(sc.lq->R());
    l["Q_h"] = matrix_json(sc.lq->Q_h());
    l["horizon"] = sc.lq->horizon() ? json(*sc.lq->horizon()) : json(nullptr);
    j["lq"] = std::move(l);
  } else {
    throw Error(ErrorKind::InvalidArgument, "scenario has no system");
  }

  json units = json::object();
  if (sc.units.state) units["state"] = map_json(*sc.units.state);
  if (sc.units.input) units["input"] = map_json(*sc.units.input);
  if (sc.units.disturbance) units["disturbance"] = map_json(*sc.units.disturbance);
  if (!units.empty()) j["units"] = std::move(units);
  if (!sc.penalties.empty()) {
    json pen = json::array();
    for (const auto& p : sc.penalties) pen.push_back({p.gamma_h(), p.gamma_e()});
    j["penalties"] = std::move(pen);
  }
  if (sc.rollout) {
    j["rollout"] = {{"n_rollouts", sc.rollout->n_rollouts},
                    {"seed", sc.rollout->seed},
                    {"initial_state", sc.rollout->initial_state},
                    {"model", std::string(model_name(sc.rollout->model))}};
  }
  write_file_atomic(path, [&](std::ostream& os) { os << j.dump(1) << '\n'; });
}

// --------------------------------------------------------------------------
// Bundled examples
// --------------------------------------------------------------------------

UnitMaps irrigation_units() {
  return {StateMap{0.0, 50.0 / 99.0}, StateMap{0.0, 150.0 / 74.0}, StateMap{-20.0, 40.0 / 39.0}};
}

FiniteSystem build_irrigation(const IrrigationOptions& opt) {
  constexpr int ns = 100, nu = 75, nw = 40;
  const UnitMaps units = irrigation_units();
  const StateMap& m = *units.state;
  const StateMap& irr = *units.input;
  const StateMap& ev = *units.disturbance;

  double wsum = 0.0;
  for (double w : opt.weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorKind::InvalidArgument, "mixture weights must be nonnegative");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw Error(ErrorKind::InvalidArgument, "mixture weights sum to zero");

  FiniteSystemSpec s;
  s.n_states = ns;
  s.n_inputs = nu;
  s.n_dist = nw;
  s.horizon = opt.horizon;
  s.layout = EmpiricalLayout::Shared;
  s.transition.resize(static_cast<std::size_t>(ns) * nu * nw);
  s.stage_cost.resize(static_cast<std::size_t>(ns) * nu);
  s.terminal_cost.resize(ns);

  for (int x = 0; x < ns; ++x) {
    s.terminal_cost[static_cast<std::size_t>(x)] = irrigation_gx(x, m);
    for (int u = 0; u < nu; ++u) {
      const double water = irr.offset + irr.slope * u;
      s.stage_cost[static_cast<std::size_t>(x) * nu + u] = irrigation_gx(x, m) + 20.0 * water;
      for (int w = 0; w < nw; ++w) {
        const double moist = std::clamp(m.offset + m.slope * x + water / 3.0 + ev.offset + ev.slope * w,
                                        0.0, 50.0);
        const double t = (moist - m.offset) / m.slope;
        const double lo = std::floor(t);
        int idx = static_cast<int>(lo);
        if (t - lo > 0.5 + 1e-9) ++idx;  // ties go to the lower state
        s.transition[(static_cast<std::size_t>(x) * nu + u) * nw + w] = std::clamp(idx, 0, ns - 1);
      }
    }
  }

  // Uniform over all bins, plus two components with 95% on the bins inside
  // [−15, −5] and [−13, −2] and 5% spread uniformly.
  auto component = [&](double lo, double hi) {
    std::vector<double> c(nw, 0.05 / nw);
    int inside = 0;
    for (int w = 0; w < nw; ++w) {
      const double e = ev.offset + ev.slope * w;
      if (e >= lo - 1e-9 && e <= hi + 1e-9) ++inside;
    }
    for (int w = 0; w < nw; ++w) {
      const double e = ev.offset + ev.slope * w;
      if (e >= lo - 1e-9 && e <= hi + 1e-9) c[static_cast<std::size_t>(w)] += 0.95 / inside;
    }
    return c;
  };
  const std::vector<double> c0(nw, 1.0 / nw);
  const auto c1 = component(-15.0, -5.0);
  const auto c2 = component(-13.0, -2.0);
  s.empirical.resize(nw);
  double total = 0.0;
  for (std::size_t w = 0; w < static_cast<std::size_t>(nw); ++w) {
    s.empirical[w] = opt.weights[0] * c0[w] + opt.weights[1] * c1[w] + opt.weights[2] * c2[w];
    total += s.empirical[w];
  }
  for (auto& v : s.empirical) v /= total;
  return FiniteSystem::create(std::move(s));
}

ScenarioFile irrigation_scenario(const IrrigationOptions& options) {
  ScenarioFile sc;
  sc.name = "irrigation";
  sc.finite = build_irrigation(options);
  sc.units = irrigation_units();
  sc.penalties = {Penalties(0, 0), Penalties(0, 100), Penalties(30, 100), Penalties(100, 100)};
  RolloutDefaults d;
  d.n_rollouts = 5000;
  d.seed = 1;
  d.initial_state = kIrrigationInitialState;
  sc.rollout = d;
  return sc;
}

std::vector<double> fig3_state_values() {
  std::vector<double> v(101);
  for (int i = 0; i <= 100; ++i) v[static_cast<std::size_t>(i)] = 100.0 * i;
  return v;
}

FiniteSystem build_fig3_scenario() {
  const auto values = fig3_state_values();
  const int n = static_cast<int>(values.size());
  constexpr int kSure = 40;  // 4000
  FiniteSystemSpec s;
  s.n_states = n;
  s.n_inputs = 2;
  s.n_dist = n;
  s.horizon = 1;
  s.layout = EmpiricalLayout::Shared;
  s.stage_cost.assign(static_cast<std::size_t>(n) * 2, 0.0);
  s.terminal_cost = values;
  s.transition.resize(static_cast<std::size_t>(n) * 2 * n);
  for (int x = 0; x < n; ++x)
    for (int w = 0; w < n; ++w) {
      s.transition[(static_cast<std::size_t>(x) * 2 + 0) * n + w] = kSure;
      s.transition[(static_cast<std::size_t>(x) * 2 + 1) * n + w] = w;
    }
  s.empirical.assign(static_cast<std::size_t>(n), kFig3FloorMass / n);
  for (int w : {19, 20, 21}) s.empirical[static_cast<std::size_t>(w)] += (1.0 - kFig3FloorMass) / 3.0;
  return FiniteSystem::create(std::move(s));
}

std::vector<double> fig4_state_values() {
  std::vector<double> v;
  for (int i = 0; i < 15; ++i) v.push_back(i);
  v.push_back(4000.0);
  v.push_back(10000.0);
  return v;
}

FiniteSystem build_fig4_scenario() {
  const auto values = fig4_state_values();
  const int n = static_cast<int>(values.size());
  constexpr int kSure = 15, kTop = 16, kLowValues = 15;
  const int low_atoms = kLowValues * kFig4AtomsPerValue;
  const int nw = low_atoms + 1;
  FiniteSystemSpec s;
  s.n_states = n;
  s.n_inputs = 2;
  s.n_dist = nw;
  s.horizon = 1;
  s.layout = EmpiricalLayout::Shared;
  s.stage_cost.assign(static_cast<std::size_t>(n) * 2, 0.0);
  s.terminal_cost = values;
  s.transition.resize(static_cast<std::size_t>(n) * 2 * nw);
  for (int x = 0; x < n; ++x)
    for (int w = 0; w < nw; ++w) {
      s.transition[(static_cast<std::size_t>(x) * 2 + 0) * nw + w] = kSure;
      s.transition[(static_cast<std::size_t>(x) * 2 + 1) * nw + w] =
          w < low_atoms ? w / kFig4AtomsPerValue : kTop;
    }
  s.empirical.assign(static_cast<std::size_t>(nw), (1.0 - kFig4TopMass) / low_atoms);
  s.empirical.back() = kFig4TopMass;
  return FiniteSystem::create(std::move(s));
}

double grid_value(GridRange range, int n, int i) {
  return range.lo + (range.hi - range.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

FiniteSystem discretize_scalar_lq(const LqSystem& lq, GridRange xr, GridRange ur, GridRange wr,
                                  int n_x, int n_u, int n_w) {
  if (n_x < 3 || n_u < 3 || n_w < 3)
    throw Error(ErrorKind::DegenerateGrid, "every grid needs at least 3 points");
  if (lq.n_x() != 1 || lq.n_u() != 1 || lq.n_w() != 1)
    throw Error(ErrorKind::InvalidArgument, "discretization needs a scalar system");
  if (lq.infinite_horizon())
    throw Error(ErrorKind::InvalidArgument, "discretization needs a finite horizon");
  for (const GridRange& r : {xr, ur, wr})
    if (!(r.hi > r.lo)) throw Error(ErrorKind::DegenerateGrid, "grid range must have hi > lo");

  const double a = lq.A()(0, 0), b = lq.B()(0, 0), d = lq.D()(0, 0);
  const double q = lq.Q()(0, 0), rr = lq.R()(0, 0), qh = lq.Q_h()(0, 0);
  const double dx = (xr.hi - xr.lo) / (n_x - 1);

  FiniteSystemSpec s;
  s.n_states = n_x;
  s.n_inputs = n_u;
  s.n_dist = n_w;
  s.horizon = *lq.horizon();
  s.layout = EmpiricalLayout::Shared;
  s.transition.resize(static_cast<std::size_t>(n_x) * n_u * n_w);
  s.stage_cost.resize(static_cast<std::size_t>(n_x) * n_u);
  s.terminal_cost.resize(static_cast<std::size_t>(n_x));
  for (int i = 0; i < n_x; ++i) {
    const double x = grid_value(xr, n_x, i);
    s.terminal_cost[static_cast<std::size_t>(i)] = qh * x * x;
    for (int j = 0; j < n_u; ++j) {
      const double u = grid_value(ur, n_u, j);
      s.stage_cost[static_cast<std::size_t>(i) * n_u + j] = q * x * x + rr * u * u;
      for (int l = 0; l < n_w; ++l) {
        const double next = a * x + b * u + d * grid_value(wr, n_w, l);
        const long idx = std::lround((next - xr.lo) / dx);
        s.transition[(static_cast<std::size_t>(i) * n_u + j) * n_w + l] =
            static_cast<std::int32_t>(std::clamp<long>(idx, 0, n_x - 1));
      }
    }
  }
  s.empirical.resize(static_cast<std::size_t>(n_w));
  double total = 0.0;
  for (int l = 0; l < n_w; ++l) {
    const double lo = l == 0 ? -std::numeric_limits<double>::infinity()
                             : 0.5 * (grid_value(wr, n_w, l - 1) + grid_value(wr, n_w, l));
    const double hi = l == n_w - 1 ? std::numeric_limits<double>::infinity()
                                   : 0.5 * (grid_value(wr, n_w, l) + grid_value(wr, n_w, l + 1));
    s.empirical[static_cast<std::size_t>(l)] = normal_cdf(hi) - normal_cdf(lo);
    total += s.empirical[static_cast<std::size_t>(l)];
  }
  for (auto& v : s.empirical) v /= total;
  return FiniteSystem::create(std::move(s));
}

// --------------------------------------------------------------------------
// Random instances
// --------------------------------------------------------------------------

std::vector<double> random_distribution(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<double> r(static_cast<std::size_t>(n));
  for (auto& v : r) v = unif(rng);
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  for (auto& v : r) v /= total;
  return r;
}

FiniteSystem random_finite_system(std::uint64_t seed, const RandomSystemOptions& o) {
  if (o.n_states <= 0 || o.n_inputs <= 0 || o.n_dist <= 0 || o.horizon <= 0)
    throw Error(ErrorKind::InvalidArgument, "random system dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, o.n_states - 1);

  FiniteSystemSpec s;
  s.n_states = o.n_states;
  s.n_inputs = o.n_inputs;
  s.n_dist = o.n_dist;
  s.horizon = o.horizon;
  s.layout = o.layout;
  s.transition.resize(static_cast<std::size_t>(o.n_states) * o.n_inputs * o.n_dist);
  for (auto& t : s.transition) t = pick(rng);
  s.stage_cost.resize(static_cast<std::size_t>(o.n_states) * o.n_inputs);
  for (auto& c : s.stage_cost) c = o.cost_scale * unif(rng);
  s.terminal_cost.resize(static_cast<std::size_t>(o.n_states));
  for (auto& c : s.terminal_cost) c = o.cost_scale * unif(rng);

  const auto nw = static_cast<std::size_t>(o.n_dist);
  const std::size_t rows = s.empirical_rows();
  s.empirical.resize(rows * nw);

  std::vector<double> base(nw);
  if (o.shared_modal_mass) {
    for (std::size_t w = 0; w < nw; ++w) base[w] = 0.1 + 0.8 * unif(rng);
    base[0] = 1.0 + unif(rng);  // unique maximum
    const double total = std::accumulate(base.begin(), base.end(), 0.0);
    for (auto& v : base) v /= total;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = s.empirical.data() + r * nw;
    if (o.shared_modal_mass) {
      std::vector<double> perm = base;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::copy(perm.begin(), perm.end(), row);
      continue;
    }
    double total = 0.0;
    for (std::size_t w = 0; w < nw; ++w) {
      row[w] = unif(rng) < o.zero_fraction ? 0.0 : 0.05 + unif(rng);
      total += row[w];
    }
    if (total == 0.0) {
      row[std::uniform_int_distribution<std::size_t>(0, nw - 1)(rng)] = 1.0;
      total = 1.0;
    }
    for (std::size_t w = 0; w < nw; ++w) row[w] /= total;
  }
  return FiniteSystem::create(std::move(s));
}

}  // namespace minsoftmax
