#include "flexclf/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "flexclf/clf.hpp"

namespace flexclf::cli {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Tracks which keys of an object were consumed so that leftovers can be
// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) invalid(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const json* find(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) invalid(join(path_, it.key()), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) invalid(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) invalid(path, "must be finite");
  return d;
}

long long as_integer(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15)
      return static_cast<long long>(d);
  }
  invalid(path, "expected an integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) invalid(path, "expected a string");
  return v.get<std::string>();
}

void read_number(ObjectReader& r, const std::string& key, double& out) {
  if (const json* v = r.find(key)) out = as_number(*v, r.path(key));
}

void read_number(ObjectReader& r, const std::string& key, std::optional<double>& out) {
  if (const json* v = r.find(key)) {
    if (!v->is_null()) out = as_number(*v, r.path(key));
  }
}

Vector as_vector(const json& v, const std::string& path, Eigen::Index n) {
  if (!v.is_array()) invalid(path, "expected an array");
  if (n >= 0 && static_cast<Eigen::Index>(v.size()) != n) {
    std::ostringstream os;
    os << "expected " << n << " entries, got " << v.size();
    invalid(path, os.str());
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

// A scalar s means s * I, a flat array the diagonal, nested arrays the full
// matrix.
Matrix as_matrix(const json& v, const std::string& path, Eigen::Index n) {
  if (v.is_number()) return as_number(v, path) * Matrix::Identity(n, n);
  if (!v.is_array()) invalid(path, "expected a number or an array");
  if (static_cast<Eigen::Index>(v.size()) != n) {
    std::ostringstream os;
    os << "expected " << n << " rows, got " << v.size();
    invalid(path, os.str());
  }
  if (n > 0 && !v[0].is_array()) return as_vector(v, path, n).asDiagonal();
  Matrix M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    M.row(i) = as_vector(v[static_cast<std::size_t>(i)], row_path, n).transpose();
  }
  return M;
}

void require_symmetric(const Matrix& M, const std::string& path) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    invalid(path, "matrix must be symmetric");
}

void require_pd(const Matrix& M, const std::string& path) {
  require_symmetric(M, path);
  if (Eigen::LLT<Matrix>(M).info() != Eigen::Success)
    invalid(path, "matrix must be positive definite");
}

void require_psd(const Matrix& M, const std::string& path) {
  require_symmetric(M, path);
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
    invalid(path, "matrix must be positive semidefinite");
}

int state_dim(const PlantConfig& p) {
  if (p.type == "integrator_chain") return p.n;
  if (p.type == "scalar") return 1;
  return 2;
}

PlantConfig parse_plant(const json& v) {
  PlantConfig p;
  if (v.is_string()) {
    p.type = v.get<std::string>();
  } else {
    ObjectReader r(v, "plant");
    const json* type = r.find("type");
    if (!type) invalid("plant.type", "missing");
    p.type = as_string(*type, "plant.type");
    if (p.type == "integrator_chain") {
      if (const json* n = r.find("n")) {
        const long long nn = as_integer(*n, "plant.n");
        if (nn < 1 || nn > 64) invalid("plant.n", "must lie in [1, 64]");
        p.n = static_cast<int>(nn);
      }
      read_number(r, "Ts", p.Ts);
      read_number(r, "u_max", p.u_max);
    } else if (p.type == "scalar") {
      p.Ts = 1.0;
      read_number(r, "a", p.a);
      read_number(r, "b", p.b);
      read_number(r, "u_max", p.u_max);
      read_number(r, "Ts", p.Ts);
    } else if (p.type == "buck_boost") {
      auto& b = p.buck_boost;
      read_number(r, "V_in", b.V_in);
      read_number(r, "L", b.L);
      read_number(r, "C", b.C);
      read_number(r, "R_load", b.R_load);
      read_number(r, "Ts", b.Ts);
      read_number(r, "duty_ref", b.duty_ref);
    } else if (p.type == "actuator") {
      auto& a = p.actuator;
      read_number(r, "mass", a.mass);
      read_number(r, "damping", a.damping);
      read_number(r, "spring", a.spring);
      read_number(r, "force_gain", a.force_gain);
      read_number(r, "Ts", a.Ts);
      read_number(r, "u_max", a.u_max);
    }
    r.reject_unknown();
  }
  if (p.type == "scalar" && v.is_string()) p.Ts = 1.0;
  if (p.type != "integrator_chain" && p.type != "scalar" && p.type != "buck_boost" &&
      p.type != "actuator")
    invalid("plant.type",
            "unknown plant '" + p.type +
                "' (expected integrator_chain, scalar, buck_boost or actuator)");
  try {
    (void)build_plant(p);
  } catch (const InvalidParameter& e) {
    invalid("plant", e.what());
  }
  return p;
}

ClfConfig parse_clf(const json& v, int n, int m) {
  ClfConfig c;
  ObjectReader r(v, "clf");
  if (const json* P = r.find("P")) {
    c.P = as_matrix(*P, "clf.P", n);
    require_pd(*c.P, "clf.P");
  }
  if (const json* Q = r.find("Q")) {
    c.Q = as_matrix(*Q, "clf.Q", n);
    require_psd(*c.Q, "clf.Q");
  }
  if (const json* R = r.find("R")) {
    c.R = as_matrix(*R, "clf.R", m);
    require_pd(*c.R, "clf.R");
  }
  read_number(r, "rho", c.rho);
  if (c.rho && !(*c.rho >= 0.0 && *c.rho < 1.0)) invalid("clf.rho", "rho must lie in [0,1)");
  read_number(r, "verify_radius", c.verify_radius);
  if (c.verify_radius && !(*c.verify_radius > 0.0))
    invalid("clf.verify_radius", "must be > 0");
  if (const json* s = r.find("verify_samples")) {
    const long long ns = as_integer(*s, "clf.verify_samples");
    if (ns < 1 || ns > 10000000) invalid("clf.verify_samples", "must lie in [1, 1e7]");
    c.verify_samples = static_cast<int>(ns);
  }
  r.reject_unknown();
  return c;
}

ControllerConfig parse_controller(const json& v, int m) {
  ControllerConfig c;
  auto set_kind = [&c](const std::string& s, const std::string& path) {
    if (s == "classical") {
      c.kind = ControllerKind::Classical;
    } else if (s == "flexible") {
      c.kind = ControllerKind::Flexible;
    } else {
      invalid(path, "expected 'classical' or 'flexible', got '" + s + "'");
    }
  };
  if (v.is_string()) {
    set_kind(v.get<std::string>(), "controller");
    return c;
  }
  ObjectReader r(v, "controller");
  if (const json* t = r.find("type")) set_kind(as_string(*t, "controller.type"), "controller.type");
  if (const json* Ru = r.find("R_u")) {
    c.R_u = as_matrix(*Ru, "controller.R_u", m);
    require_pd(*c.R_u, "controller.R_u");
  }
  read_number(r, "alpha", c.alpha);
  if (c.alpha && !(*c.alpha > 0.0)) invalid("controller.alpha", "alpha must be > 0");
  read_number(r, "delta", c.delta);
  if (c.delta && !(*c.delta >= 0.0)) invalid("controller.delta", "delta must be >= 0");
  read_number(r, "gamma", c.gamma);
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) invalid("controller.gamma", "gamma must lie in [0,1)");
  read_number(r, "c", c.c);
  if (c.c && !(*c.c > 0.0)) invalid("controller.c", "c must be > 0");
  r.reject_unknown();
  return c;
}

GridConfig parse_grid(const json& v, int n) {
  GridConfig g;
  ObjectReader r(v, "grid");
  const json* lower = r.find("lower");
  const json* upper = r.find("upper");
  const json* counts = r.find("counts");
  if (!lower || !upper || !counts) invalid("grid", "lower, upper and counts are required");
  const Vector lo = as_vector(*lower, "grid.lower", n);
  const Vector hi = as_vector(*upper, "grid.upper", n);
  if (!counts->is_array() || static_cast<int>(counts->size()) != n)
    invalid("grid.counts", "expected " + std::to_string(n) + " entries");
  for (int d = 0; d < n; ++d) {
    if (lo[d] > hi[d]) invalid("grid.lower", "lower must be <= upper");
    g.lower.push_back(lo[d]);
    g.upper.push_back(hi[d]);
    const long long c = as_integer((*counts)[d], "grid.counts[" + std::to_string(d) + "]");
    if (c < 1 || c > 100000000) invalid("grid.counts", "counts must lie in [1, 1e8]");
    g.counts.push_back(static_cast<int>(c));
  }
  if (const json* cap = r.find("max_cells")) {
    const long long mc = as_integer(*cap, "grid.max_cells");
    if (mc < 1) invalid("grid.max_cells", "must be >= 1");
    g.max_cells = static_cast<std::size_t>(mc);
  }
  r.reject_unknown();
  return g;
}

BenchConfig parse_bench(const json& v) {
  BenchConfig b;
  ObjectReader r(v, "bench");
  if (const json* reps = r.find("repetitions")) {
    const long long n = as_integer(*reps, "bench.repetitions");
    if (n < 1 || n > 100000000) invalid("bench.repetitions", "must lie in [1, 1e8]");
    b.repetitions = static_cast<int>(n);
  }
  read_number(r, "budget_us", b.budget_us);
  if (b.budget_us && !(*b.budget_us > 0.0)) invalid("bench.budget_us", "must be > 0");
  r.reject_unknown();
  return b;
}

json parse_strict(const std::string& text) {
  // One key set per open object; a repeated key is a parse error.
  struct Frame {
    std::set<std::string> keys;
    std::string current;
  };
  std::vector<Frame> frames;
  json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        frames.emplace_back();
        break;
      case json::parse_event_t::key: {
        const std::string key = parsed.get<std::string>();
        if (!frames.back().keys.insert(key).second) {
          std::string where;
          for (std::size_t i = 0; i + 1 < frames.size(); ++i) where += frames[i].current + ".";
          throw ParseError("duplicate key '" + where + key + "'");
        }
        frames.back().current = key;
        break;
      }
      case json::parse_event_t::object_end:
        frames.pop_back();
        break;
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    // Locate the byte offset reported by the parser.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col << ": " << e.what();
    throw ParseError(os.str());
  }
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

Config parse_config_text(const std::string& text) {
  const json root = parse_strict(text);
  Config cfg;
  ObjectReader r(root, "");
  const json* plant = r.find("plant");
  if (!plant) invalid("plant", "missing");
  cfg.plant = parse_plant(*plant);
  const int n = state_dim(cfg.plant);
  const int m = 1;

  if (const json* c = r.find("clf")) cfg.clf = parse_clf(*c, n, m);
  if (const json* c = r.find("controller")) cfg.controller = parse_controller(*c, m);
  if (const json* x0 = r.find("x0")) cfg.x0 = as_vector(*x0, "x0", n);
  if (const json* s = r.find("steps")) {
    const long long steps = as_integer(*s, "steps");
    if (steps < 1 || steps > 100000000) invalid("steps", "must lie in [1, 1e8]");
    cfg.steps = static_cast<int>(steps);
  }
  read_number(r, "convergence_tol", cfg.convergence_tol);
  if (!(cfg.convergence_tol > 0.0)) invalid("convergence_tol", "must be > 0");
  if (const json* s = r.find("seed")) {
    if (s->is_number_unsigned()) {
      cfg.seed = s->get<std::uint64_t>();
    } else {
      const long long seed = as_integer(*s, "seed");
      if (seed < 0) invalid("seed", "must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(seed);
    }
  }
  if (const json* g = r.find("grid")) cfg.grid = parse_grid(*g, n);
  if (const json* b = r.find("bench")) cfg.bench = parse_bench(*b);
  r.reject_unknown();
  return cfg;
}

Config parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw ConfigError("cannot read config file '" + path.string() + "'");
  try {
    return parse_config_text(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

PlantModel build_plant(const PlantConfig& p) {
  if (p.type == "integrator_chain") return integrator_chain(p.n, p.Ts, p.u_max);
  if (p.type == "scalar") {
    if (!(p.Ts > 0.0)) throw InvalidParameter("scalar: Ts must be > 0");
    return scalar_plant(p.a, p.b, p.u_max);
  }
  if (p.type == "buck_boost") return buck_boost(p.buck_boost);
  if (p.type == "actuator") return actuator(p.actuator);
  throw InvalidParameter("unknown plant type '" + p.type + "'");
}

double plant_sampling_period(const PlantConfig& p) {
  if (p.type == "buck_boost") return p.buck_boost.Ts;
  if (p.type == "actuator") return p.actuator.Ts;
  return p.Ts;
}

Resolved resolve(const Config& input) {
  Config cfg = input;
  PlantModel model = build_plant(cfg.plant);
  const int n = model.n();
  const int m = model.m();

  if (!cfg.x0) {
    Vector x0 = Vector::Zero(n);
    if (cfg.plant.type == "buck_boost") {
      x0 = -compute_equilibrium(cfg.plant.buck_boost).x_bar;  // start-up from rest
    } else if (cfg.plant.type == "actuator") {
      x0[0] = 0.01;
    } else {
      x0[0] = 1.0;
    }
    cfg.x0 = x0;
  }
  if (!cfg.clf.Q) cfg.clf.Q = Matrix::Identity(n, n);
  if (!cfg.clf.R) cfg.clf.R = Matrix::Identity(m, m);
  if (!cfg.controller.R_u) cfg.controller.R_u = Matrix::Identity(m, m);

  const Linearization lin = linearize(model, Vector::Zero(n), Vector::Zero(m));
  std::optional<QuadraticCLF> V;
  try {
    V = cfg.clf.P ? QuadraticCLF(*cfg.clf.P)
                  : synthesize_dare(lin.A, lin.B, *cfg.clf.Q, *cfg.clf.R);
  } catch (const InvalidParameter& e) {
    invalid(cfg.clf.P ? "clf.P" : "clf", e.what());
  } catch (const NoConvergence& e) {
    invalid("clf", std::string("CLF synthesis failed: ") + e.what());
  }

  const double V0 = V->evaluate(*cfg.x0);
  if (!cfg.clf.verify_radius) cfg.clf.verify_radius = V0 > 0.0 ? 0.01 * V0 : 1.0;

  json details = json::object();
  const Matrix K = lqr_gain(lin.A, lin.B, *cfg.clf.R, V->P());
  const double ratio = max_lqr_decrease_ratio(*V, model, K, *cfg.clf.verify_radius,
                                              cfg.clf.verify_samples, cfg.seed);
  details["lqr_decrease_ratio"] = ratio;
  if (!cfg.clf.rho) cfg.clf.rho = default_rho_from_ratio(ratio);
  if (!cfg.controller.c) cfg.controller.c = V0 > 0.0 ? V0 : 1.0;
  if (!cfg.controller.delta) cfg.controller.delta = V0;
  if (!cfg.controller.alpha) cfg.controller.alpha = default_alpha(*cfg.controller.R_u);
  if (!cfg.bench.budget_us) cfg.bench.budget_us = plant_sampling_period(cfg.plant) * 1e6;

  const ConeParams cone{*cfg.clf.rho, *cfg.controller.c};
  const ContractionReport local = verify_local_contraction(
      *V, model, cone, *cfg.clf.verify_radius, cfg.clf.verify_samples, cfg.seed);
  details["local_contraction_fraction"] = local.feasible_fraction;
  details["P"] = matrix_json(V->P());
  details["lqr_gain"] = matrix_json(K);
  if (cfg.plant.type == "buck_boost") {
    const Equilibrium eq = compute_equilibrium(cfg.plant.buck_boost);
    details["equilibrium"] = {{"i_bar", eq.x_bar[0]}, {"v_bar", eq.x_bar[1]},
                              {"duty", eq.u_bar[0]}};
  }

  Scenario s{std::move(model),
             *V,
             cone,
             *cfg.controller.R_u,
             *cfg.controller.alpha,
             EnvelopeSchedule{*cfg.controller.delta, cfg.controller.gamma},
             cfg.controller.kind,
             *cfg.x0,
             cfg.steps,
             plant_sampling_period(cfg.plant),
             cfg.convergence_tol,
             cfg.seed,
             SolverOptions{}};
  validate(s);
  return Resolved{std::move(cfg), std::move(s), std::move(details)};
}

json to_json(const Config& cfg) {
  json out = json::object();
  json plant = json::object();
  plant["type"] = cfg.plant.type;
  const auto& p = cfg.plant;
  if (p.type == "integrator_chain") {
    plant["n"] = p.n;
    plant["Ts"] = p.Ts;
    plant["u_max"] = p.u_max;
  } else if (p.type == "scalar") {
    plant["a"] = p.a;
    plant["b"] = p.b;
    plant["u_max"] = p.u_max;
    plant["Ts"] = p.Ts;
  } else if (p.type == "buck_boost") {
    const auto& b = p.buck_boost;
    plant["V_in"] = b.V_in;
    plant["L"] = b.L;
    plant["C"] = b.C;
    plant["R_load"] = b.R_load;
    plant["Ts"] = b.Ts;
    plant["duty_ref"] = b.duty_ref;
  } else if (p.type == "actuator") {
    const auto& a = p.actuator;
    plant["mass"] = a.mass;
    plant["damping"] = a.damping;
    plant["spring"] = a.spring;
    plant["force_gain"] = a.force_gain;
    plant["Ts"] = a.Ts;
    plant["u_max"] = a.u_max;
  }
  out["plant"] = std::move(plant);

  json clf = json::object();
  if (cfg.clf.P) clf["P"] = matrix_json(*cfg.clf.P);
  if (cfg.clf.Q) clf["Q"] = matrix_json(*cfg.clf.Q);
  if (cfg.clf.R) clf["R"] = matrix_json(*cfg.clf.R);
  if (cfg.clf.rho) clf["rho"] = *cfg.clf.rho;
  if (cfg.clf.verify_radius) clf["verify_radius"] = *cfg.clf.verify_radius;
  clf["verify_samples"] = cfg.clf.verify_samples;
  out["clf"] = std::move(clf);

  json ctrl = json::object();
  ctrl["type"] = to_string(cfg.controller.kind);
  if (cfg.controller.R_u) ctrl["R_u"] = matrix_json(*cfg.controller.R_u);
  if (cfg.controller.alpha) ctrl["alpha"] = *cfg.controller.alpha;
  if (cfg.controller.delta) ctrl["delta"] = *cfg.controller.delta;
  ctrl["gamma"] = cfg.controller.gamma;
  if (cfg.controller.c) ctrl["c"] = *cfg.controller.c;
  out["controller"] = std::move(ctrl);

  if (cfg.x0) out["x0"] = vector_json(*cfg.x0);
  out["steps"] = cfg.steps;
  out["convergence_tol"] = cfg.convergence_tol;
  out["seed"] = cfg.seed;
  if (cfg.grid) {
    json g = json::object();
    g["lower"] = cfg.grid->lower;
    g["upper"] = cfg.grid->upper;
    g["counts"] = cfg.grid->counts;
    g["max_cells"] = cfg.grid->max_cells;
    out["grid"] = std::move(g);
  }
  json bench = json::object();
  bench["repetitions"] = cfg.bench.repetitions;
  if (cfg.bench.budget_us) bench["budget_us"] = *cfg.bench.budget_us;
  out["bench"] = std::move(bench);
  return out;
}

}  // namespace flexclf::cli
