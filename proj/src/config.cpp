#include "switchsplit/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace switchsplit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Collector {
  std::vector<std::string> violations;

  void fail(const std::string& path, const std::string& msg) {
    violations.push_back(path + ": " + msg);
  }

  // Returns nullptr when the key is absent. Flags unexpected keys later
  // through check_keys.
  const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  void check_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* k : allowed)
        if (it.key() == k) {
          known = true;
          break;
        }
      if (!known) fail(path + "." + it.key(), "unknown field");
    }
  }

  bool get_int(const json& v, const std::string& path, int& out, int min_value) {
    if (!v.is_number_integer()) {
      fail(path, "expected an integer");
      return false;
    }
    const auto x = v.get<long long>();
    if (x < min_value) {
      fail(path, "must be >= " + std::to_string(min_value));
      return false;
    }
    if (x > std::numeric_limits<int>::max()) {
      fail(path, "value too large");
      return false;
    }
    out = static_cast<int>(x);
    return true;
  }

  bool get_long(const json& v, const std::string& path, long& out, long min_value) {
    if (!v.is_number_integer()) {
      fail(path, "expected an integer");
      return false;
    }
    const auto x = v.get<long long>();
    if (x < min_value) {
      fail(path, "must be >= " + std::to_string(min_value));
      return false;
    }
    out = static_cast<long>(x);
    return true;
  }

  bool get_seed(const json& v, const std::string& path, std::uint64_t& out) {
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
      return true;
    }
    if (v.is_number_integer() && v.get<long long>() >= 0) {
      out = static_cast<std::uint64_t>(v.get<long long>());
      return true;
    }
    fail(path, "expected a nonnegative integer");
    return false;
  }

  bool get_double(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) {
      fail(path, "expected a number");
      return false;
    }
    out = v.get<double>();
    if (!std::isfinite(out)) {
      fail(path, "must be finite");
      return false;
    }
    return true;
  }

  bool get_bool(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) {
      fail(path, "expected a boolean");
      return false;
    }
    out = v.get<bool>();
    return true;
  }

  bool get_string(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) {
      fail(path, "expected a string");
      return false;
    }
    out = v.get<std::string>();
    return true;
  }

  bool get_vector(const json& v, const std::string& path, int size, Vector& out) {
    if (!v.is_array() || static_cast<int>(v.size()) != size) {
      fail(path, "expected a list of " + std::to_string(size) + " numbers");
      return false;
    }
    out.resize(size);
    for (int i = 0; i < size; ++i) {
      double x;
      if (!get_double(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]", x))
        return false;
      out[i] = x;
    }
    return true;
  }

  bool get_matrix(const json& v, const std::string& path, int rows, int cols, Matrix& out) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows) {
      fail(path, "expected " + std::to_string(rows) + " rows of " + std::to_string(cols) +
                     " numbers");
      return false;
    }
    out.resize(rows, cols);
    for (int i = 0; i < rows; ++i) {
      Vector row;
      if (!get_vector(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]",
                      cols, row))
        return false;
      out.row(i) = row.transpose();
    }
    return true;
  }
};

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Matrix& mat) {
  json out = json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    out.push_back(row);
  }
  return out;
}

void parse_model(Collector& c, const json* section, ExperimentConfig& cfg) {
  cfg.d = 1;
  cfg.m = 1;
  if (section) {
    if (!section->is_object()) {
      c.fail("model", "expected an object");
      return;
    }
    c.check_keys(*section, "model", {"d", "m", "drift", "rates", "initial"});
    if (const json* v = c.find(*section, "d")) c.get_int(*v, "model.d", cfg.d, 1);
    if (const json* v = c.find(*section, "m")) c.get_int(*v, "model.m", cfg.m, 1);
  }
  const int d = cfg.d;
  const int m = cfg.m;

  // Defaults: zero constant drift, zero rates, point mass at the origin,
  // uniform initial mode law.
  cfg.drift.family = DriftFamily::Constant;
  cfg.drift.A.clear();
  cfg.drift.c.assign(static_cast<std::size_t>(m), Vector::Zero(d));
  cfg.rates.family = RateFamily::Constant;
  cfg.rates.lambda_bar = Matrix::Zero(m, m);
  cfg.rates.w.clear();
  cfg.rates.beta = Matrix();
  cfg.initial.x0 = Vector::Zero(d);
  cfg.initial.scale0 = 0.0;
  cfg.initial.theta_probs = Vector::Constant(m, 1.0 / m);
  if (!section) return;

  if (const json* drift = c.find(*section, "drift")) {
    if (!drift->is_object()) {
      c.fail("model.drift", "expected an object");
    } else {
      c.check_keys(*drift, "model.drift", {"family", "A", "c"});
      std::string family = "constant";
      if (const json* v = c.find(*drift, "family"))
        c.get_string(*v, "model.drift.family", family);
      if (family == "constant") {
        cfg.drift.family = DriftFamily::Constant;
      } else if (family == "affine") {
        cfg.drift.family = DriftFamily::Affine;
      } else {
        c.fail("model.drift.family", "expected \"constant\" or \"affine\"");
      }
      if (const json* v = c.find(*drift, "c")) {
        if (!v->is_array() || static_cast<int>(v->size()) != m) {
          c.fail("model.drift.c", "expected one d-vector per mode (" + std::to_string(m) +
                                      " entries)");
        } else {
          for (int i = 0; i < m; ++i)
            c.get_vector((*v)[static_cast<std::size_t>(i)],
                         "model.drift.c[" + std::to_string(i) + "]", d,
                         cfg.drift.c[static_cast<std::size_t>(i)]);
        }
      }
      const json* A = c.find(*drift, "A");
      if (cfg.drift.family == DriftFamily::Affine) {
        cfg.drift.A.assign(static_cast<std::size_t>(m), Matrix::Zero(d, d));
        if (!A) {
          c.fail("model.drift.A", "required for affine drift");
        } else if (!A->is_array() || static_cast<int>(A->size()) != m) {
          c.fail("model.drift.A", "expected one d x d matrix per mode (" +
                                      std::to_string(m) + " entries)");
        } else {
          for (int i = 0; i < m; ++i)
            c.get_matrix((*A)[static_cast<std::size_t>(i)],
                         "model.drift.A[" + std::to_string(i) + "]", d, d,
                         cfg.drift.A[static_cast<std::size_t>(i)]);
        }
      } else if (A) {
        c.fail("model.drift.A", "only valid for affine drift");
      }
    }
  }

  if (const json* rates = c.find(*section, "rates")) {
    if (!rates->is_object()) {
      c.fail("model.rates", "expected an object");
    } else {
      c.check_keys(*rates, "model.rates", {"family", "lambda_bar", "w", "beta"});
      std::string family = "constant";
      if (const json* v = c.find(*rates, "family"))
        c.get_string(*v, "model.rates.family", family);
      if (family == "constant") {
        cfg.rates.family = RateFamily::Constant;
      } else if (family == "logistic") {
        cfg.rates.family = RateFamily::Logistic;
      } else {
        c.fail("model.rates.family", "expected \"constant\" or \"logistic\"");
      }
      if (const json* v = c.find(*rates, "lambda_bar")) {
        Matrix lb;
        if (c.get_matrix(*v, "model.rates.lambda_bar", m, m, lb)) {
          cfg.rates.lambda_bar = lb;
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
              if (i != j && lb(i, j) < 0.0) {
                c.fail("model.rates.lambda_bar", "off-diagonal entries must be >= 0");
                i = m;
                break;
              }
        }
      }
      const json* w = c.find(*rates, "w");
      const json* beta = c.find(*rates, "beta");
      if (cfg.rates.family == RateFamily::Logistic) {
        cfg.rates.w.assign(static_cast<std::size_t>(m),
                           std::vector<Vector>(static_cast<std::size_t>(m), Vector::Zero(d)));
        cfg.rates.beta = Matrix::Zero(m, m);
        if (w) {
          if (!w->is_array() || static_cast<int>(w->size()) != m) {
            c.fail("model.rates.w", "expected an m x m grid of d-vectors");
          } else {
            for (int i = 0; i < m; ++i) {
              const json& row = (*w)[static_cast<std::size_t>(i)];
              if (!row.is_array() || static_cast<int>(row.size()) != m) {
                c.fail("model.rates.w[" + std::to_string(i) + "]",
                       "expected " + std::to_string(m) + " d-vectors");
                continue;
              }
              for (int j = 0; j < m; ++j)
                c.get_vector(row[static_cast<std::size_t>(j)],
                             "model.rates.w[" + std::to_string(i) + "][" +
                                 std::to_string(j) + "]",
                             d, cfg.rates.w[static_cast<std::size_t>(i)]
                                           [static_cast<std::size_t>(j)]);
            }
          }
        }
        if (beta) c.get_matrix(*beta, "model.rates.beta", m, m, cfg.rates.beta);
      } else {
        if (w) c.fail("model.rates.w", "only valid for logistic rates");
        if (beta) c.fail("model.rates.beta", "only valid for logistic rates");
      }
    }
  }

  if (const json* initial = c.find(*section, "initial")) {
    if (!initial->is_object()) {
      c.fail("model.initial", "expected an object");
    } else {
      c.check_keys(*initial, "model.initial", {"x0", "scale0", "theta_probs"});
      if (const json* v = c.find(*initial, "x0"))
        c.get_vector(*v, "model.initial.x0", d, cfg.initial.x0);
      if (const json* v = c.find(*initial, "scale0")) {
        double s;
        if (c.get_double(*v, "model.initial.scale0", s)) {
          if (s < 0.0)
            c.fail("model.initial.scale0", "must be >= 0");
          else
            cfg.initial.scale0 = s;
        }
      }
      if (const json* v = c.find(*initial, "theta_probs")) {
        Vector p;
        if (c.get_vector(*v, "model.initial.theta_probs", m, p)) {
          double sum = 0.0;
          bool ok = true;
          for (int i = 0; i < m; ++i) {
            if (p[i] < 0.0) {
              c.fail("model.initial.theta_probs", "entries must be >= 0");
              ok = false;
              break;
            }
            sum += p[i];
          }
          if (ok && std::abs(sum - 1.0) > 1e-12) {
            c.fail("model.initial.theta_probs", "must sum to 1 (got " +
                                                    std::to_string(sum) + ")");
            ok = false;
          }
          if (ok) cfg.initial.theta_probs = p;
        }
      }
    }
  }
}

void parse_levels(Collector& c, const json* section, ExperimentConfig& cfg) {
  cfg.phi_kind = LevelFunction::Coordinate;
  cfg.coord_index = 0;
  cfg.thresholds.clear();
  cfg.horizon_T = 0.0;
  if (!section) {
    c.fail("levels", "required section");
    return;
  }
  if (!section->is_object()) {
    c.fail("levels", "expected an object");
    return;
  }
  c.check_keys(*section, "levels", {"phi", "thresholds", "horizon_T"});

  if (const json* phi = c.find(*section, "phi")) {
    if (!phi->is_object()) {
      c.fail("levels.phi", "expected an object");
    } else {
      c.check_keys(*phi, "levels.phi", {"kind", "coord_index"});
      std::string kind = "coordinate";
      if (const json* v = c.find(*phi, "kind")) c.get_string(*v, "levels.phi.kind", kind);
      if (kind == "coordinate") {
        cfg.phi_kind = LevelFunction::Coordinate;
      } else if (kind == "euclidean-norm") {
        cfg.phi_kind = LevelFunction::EuclideanNorm;
      } else {
        c.fail("levels.phi.kind", "expected \"coordinate\" or \"euclidean-norm\"");
      }
      if (const json* v = c.find(*phi, "coord_index")) {
        if (cfg.phi_kind == LevelFunction::EuclideanNorm)
          c.fail("levels.phi.coord_index", "only valid for coordinate kind");
        else
          c.get_int(*v, "levels.phi.coord_index", cfg.coord_index, 0);
      }
    }
  }
  if (cfg.phi_kind == LevelFunction::Coordinate && cfg.coord_index >= cfg.d)
    c.fail("levels.phi.coord_index", "out of range for model dimension d = " +
                                         std::to_string(cfg.d));

  if (const json* v = c.find(*section, "thresholds")) {
    if (!v->is_array() || v->empty()) {
      c.fail("levels.thresholds", "expected a nonempty list of numbers");
    } else {
      cfg.thresholds.resize(v->size());
      bool ok = true;
      for (std::size_t i = 0; i < v->size(); ++i)
        ok = c.get_double((*v)[i], "levels.thresholds[" + std::to_string(i) + "]",
                          cfg.thresholds[i]) &&
             ok;
      if (ok) {
        for (std::size_t i = 1; i < cfg.thresholds.size(); ++i)
          if (!(cfg.thresholds[i - 1] < cfg.thresholds[i])) {
            c.fail("levels.thresholds", "must be strictly increasing");
            break;
          }
        if (cfg.phi_kind == LevelFunction::EuclideanNorm && !cfg.thresholds.empty() &&
            cfg.thresholds.front() < 0.0)
          c.fail("levels.thresholds", "must be >= 0 for euclidean-norm");
      }
    }
  } else {
    c.fail("levels.thresholds", "required");
  }

  if (const json* v = c.find(*section, "horizon_T")) {
    double T;
    if (c.get_double(*v, "levels.horizon_T", T)) {
      if (T <= 0.0)
        c.fail("levels.horizon_T", "must be > 0");
      else
        cfg.horizon_T = T;
    }
  } else {
    c.fail("levels.horizon_T", "required");
  }
}

void parse_engine(Collector& c, const json* section, ExperimentConfig& cfg) {
  cfg.engine = EngineConfig{};
  cfg.engine.schemes = {Scheme::Weighted};
  cfg.engine.dynamics = {Dynamics::Marginal};
  if (!section) {
    c.fail("engine", "required section");
    return;
  }
  if (!section->is_object()) {
    c.fail("engine", "expected an object");
    return;
  }
  c.check_keys(*section, "engine",
               {"scheme", "dynamics", "n_particles", "replicates", "seed", "step_h"});

  if (const json* v = c.find(*section, "scheme")) {
    std::string s;
    if (c.get_string(*v, "engine.scheme", s)) {
      if (s == "weighted")
        cfg.engine.schemes = {Scheme::Weighted};
      else if (s == "resampled")
        cfg.engine.schemes = {Scheme::Resampled};
      else if (s == "both")
        cfg.engine.schemes = {Scheme::Weighted, Scheme::Resampled};
      else
        c.fail("engine.scheme", "expected \"weighted\", \"resampled\" or \"both\"");
    }
  }
  if (const json* v = c.find(*section, "dynamics")) {
    std::string s;
    if (c.get_string(*v, "engine.dynamics", s)) {
      if (s == "joint")
        cfg.engine.dynamics = {Dynamics::Joint};
      else if (s == "marginal")
        cfg.engine.dynamics = {Dynamics::Marginal};
      else if (s == "both")
        cfg.engine.dynamics = {Dynamics::Joint, Dynamics::Marginal};
      else
        c.fail("engine.dynamics", "expected \"joint\", \"marginal\" or \"both\"");
    }
  }
  if (const json* v = c.find(*section, "n_particles"))
    c.get_long(*v, "engine.n_particles", cfg.engine.n_particles, 2);
  else
    c.fail("engine.n_particles", "required");
  if (const json* v = c.find(*section, "replicates"))
    c.get_int(*v, "engine.replicates", cfg.engine.replicates, 2);
  else
    c.fail("engine.replicates", "required");
  if (const json* v = c.find(*section, "seed"))
    c.get_seed(*v, "engine.seed", cfg.engine.seed);
  else
    c.fail("engine.seed", "required (runs are never seeded from the clock)");
  if (const json* v = c.find(*section, "step_h")) {
    double h;
    if (c.get_double(*v, "engine.step_h", h)) {
      if (h <= 0.0)
        c.fail("engine.step_h", "must be > 0");
      else
        cfg.engine.step_h = h;
    }
  } else {
    c.fail("engine.step_h", "required");
  }
}

void parse_output(Collector& c, const json* section, ExperimentConfig& cfg) {
  cfg.output = OutputConfig{};
  if (!section) return;
  if (!section->is_object()) {
    c.fail("output", "expected an object");
    return;
  }
  c.check_keys(*section, "output", {"format", "path", "dump_survivor_paths"});
  if (const json* v = c.find(*section, "format")) {
    std::string s;
    if (c.get_string(*v, "output.format", s)) {
      if (s == "csv")
        cfg.output.format = OutputConfig::Format::Csv;
      else if (s == "json")
        cfg.output.format = OutputConfig::Format::Json;
      else
        c.fail("output.format", "expected \"csv\" or \"json\"");
    }
  }
  if (const json* v = c.find(*section, "path")) {
    std::string s;
    if (c.get_string(*v, "output.path", s)) {
      if (s.empty())
        c.fail("output.path", "must be nonempty");
      else
        cfg.output.path = s;
    }
  }
  if (const json* v = c.find(*section, "dump_survivor_paths"))
    c.get_bool(*v, "output.dump_survivor_paths", cfg.output.dump_survivor_paths);
}

}  // namespace

ExperimentConfig load_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("json parse error: ") + e.what()});
  }

  Collector c;
  if (!doc.is_object()) throw ConfigError({"top level: expected a JSON object"});
  c.check_keys(doc, "config", {"model", "levels", "engine", "output"});

  ExperimentConfig cfg;
  parse_model(c, c.find(doc, "model"), cfg);
  parse_levels(c, c.find(doc, "levels"), cfg);
  parse_engine(c, c.find(doc, "engine"), cfg);
  parse_output(c, c.find(doc, "output"), cfg);

  // Step-size stability for the mode-transition law: h * max exit rate
  // must stay below one or one-step probabilities leave [0, 1].
  if (c.violations.empty()) {
    double bound = 0.0;
    for (int i = 0; i < cfg.m; ++i) {
      double row = 0.0;
      for (int j = 0; j < cfg.m; ++j)
        if (j != i) row += cfg.rates.lambda_bar(i, j);
      bound = std::max(bound, row);
    }
    if (cfg.engine.step_h * bound >= 1.0)
      c.fail("engine.step_h", "violates stability: step_h * max exit rate must be < 1");
  }

  if (!c.violations.empty()) throw ConfigError(std::move(c.violations));

  // Belt and braces: constructing the runtime objects revalidates.
  try {
    cfg.build_model();
    cfg.build_levels();
  } catch (const std::exception& e) {
    throw ConfigError({std::string("config: ") + e.what()});
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

SwitchingModel ExperimentConfig::build_model() const {
  return SwitchingModel(d, m, drift, rates, initial);
}

LevelSchedule ExperimentConfig::build_levels() const {
  return LevelSchedule(phi_kind, coord_index, thresholds, horizon_T);
}

const char* scheme_name(Scheme s) {
  return s == Scheme::Weighted ? "weighted" : "resampled";
}

const char* dynamics_name(Dynamics d) {
  return d == Dynamics::Joint ? "joint" : "marginal";
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json root;

  ordered_json model;
  model["d"] = d;
  model["m"] = m;
  ordered_json drift_j;
  drift_j["family"] = drift.family == DriftFamily::Constant ? "constant" : "affine";
  if (drift.family == DriftFamily::Affine) {
    json A = json::array();
    for (const auto& Ai : drift.A) A.push_back(matrix_to_json(Ai));
    drift_j["A"] = A;
  }
  json cs = json::array();
  for (const auto& ci : drift.c) cs.push_back(vector_to_json(ci));
  drift_j["c"] = cs;
  model["drift"] = drift_j;

  ordered_json rates_j;
  rates_j["family"] = rates.family == RateFamily::Constant ? "constant" : "logistic";
  rates_j["lambda_bar"] = matrix_to_json(rates.lambda_bar);
  if (rates.family == RateFamily::Logistic) {
    json w = json::array();
    for (const auto& row : rates.w) {
      json r = json::array();
      for (const auto& wij : row) r.push_back(vector_to_json(wij));
      w.push_back(r);
    }
    rates_j["w"] = w;
    rates_j["beta"] = matrix_to_json(rates.beta);
  }
  model["rates"] = rates_j;

  ordered_json initial_j;
  initial_j["x0"] = vector_to_json(initial.x0);
  initial_j["scale0"] = initial.scale0;
  initial_j["theta_probs"] = vector_to_json(initial.theta_probs);
  model["initial"] = initial_j;
  root["model"] = model;

  ordered_json levels;
  ordered_json phi;
  phi["kind"] = phi_kind == LevelFunction::Coordinate ? "coordinate" : "euclidean-norm";
  if (phi_kind == LevelFunction::Coordinate) phi["coord_index"] = coord_index;
  levels["phi"] = phi;
  levels["thresholds"] = thresholds;
  levels["horizon_T"] = horizon_T;
  root["levels"] = levels;

  ordered_json engine_j;
  engine_j["scheme"] = engine.schemes.size() == 2 ? "both" : scheme_name(engine.schemes[0]);
  engine_j["dynamics"] =
      engine.dynamics.size() == 2 ? "both" : dynamics_name(engine.dynamics[0]);
  engine_j["n_particles"] = engine.n_particles;
  engine_j["replicates"] = engine.replicates;
  engine_j["seed"] = engine.seed;
  engine_j["step_h"] = engine.step_h;
  root["engine"] = engine_j;

  ordered_json output_j;
  output_j["format"] = output.format == OutputConfig::Format::Csv ? "csv" : "json";
  output_j["path"] = output.path;
  output_j["dump_survivor_paths"] = output.dump_survivor_paths;
  root["output"] = output_j;

  return root;
}

}  // namespace switchsplit
