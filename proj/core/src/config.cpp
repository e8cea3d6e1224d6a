#include "bolab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bolab/cache.hpp"
#include "bolab/error.hpp"

namespace bolab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::ConfigError, path + ": " + message);
}

// Reads fields of one JSON object and rejects the keys nobody asked for.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return node_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "missing");
      return fallback;
    }
    if (v->is_string()) {
      const std::string s = v->get<std::string>();
      if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    }
    if (!v->is_number()) fail(at(key), "expected a number");
    return v->get<double>();
  }

  double positive(const std::string& key, double fallback, bool required = false) {
    const double v = number(key, fallback, required);
    if (!(v > 0.0)) fail(at(key), "must be positive");
    return v;
  }

  int integer(const std::string& key, int fallback, int min_value, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "missing");
      return fallback;
    }
    if (!v->is_number_integer()) fail(at(key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < min_value || x > std::numeric_limits<int>::max()) {
      fail(at(key), "must be at least " + std::to_string(min_value));
    }
    return static_cast<int>(x);
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "missing");
      return fallback;
    }
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, bool positive_only, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "missing");
      return {};
    }
    if (!v->is_array()) fail(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      if (!e.is_number()) fail(p, "expected a number");
      if (positive_only && !(e.get<double>() > 0.0)) fail(p, "must be positive");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, int min_value, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "missing");
      return {};
    }
    if (!v->is_array()) fail(at(key), "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      if (!e.is_number_integer() || e.get<long long>() < min_value) {
        fail(p, "expected an integer >= " + std::to_string(min_value));
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    const json* v = raw(key);
    if (!v) return {};
    if (!v->is_array()) fail(at(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

ModelDescription read_model(const json& node, const std::string& path) {
  Reader r(node, path);
  ModelDescription d;
  d.f_expr = r.text("f", "", true);
  d.g_expr = r.text("g", "", true);
  d.a = r.positive("a", d.a, true);
  d.n = r.integer("n", d.n, 1);
  if (d.n > 2) fail(r.at("n"), "must be 1 or 2");
  d.x_vars = r.strings("x_vars");
  d.y_var = r.text("y_var", d.y_var);
  d.f_infinity = r.positive("f_infinity", d.f_infinity);
  d.validation_box = r.positive("validation_box", d.validation_box);
  d.samples_per_axis = r.integer("samples_per_axis", d.samples_per_axis, 3);
  r.finish();
  return d;
}

InnerSolver read_inner(Reader& r, InnerSolver fallback) {
  const std::string s = r.text("inner", fallback == InnerSolver::PCG ? "pcg" : "ldlt");
  if (s == "ldlt") return InnerSolver::SparseLDLT;
  if (s == "pcg") return InnerSolver::PCG;
  fail(r.at("inner"), "expected \"ldlt\" or \"pcg\"");
}

int read_order(Reader& r, int fallback) {
  const int order = r.integer("order", fallback, 2);
  if (order != 2 && order != 4) fail(r.at("order"), "must be 2 or 4");
  return order;
}

FiberedNumerics read_fibered(const json* node, const std::string& path) {
  FiberedNumerics nm;
  if (!node) return nm;
  Reader r(*node, path);
  nm.order = read_order(r, nm.order);
  nm.points_per_width = r.positive("points_per_width", nm.points_per_width);
  nm.y_resolution = r.positive("y_resolution", nm.y_resolution);
  nm.tolerance = r.positive("tolerance", nm.tolerance);
  nm.guard = r.integer("guard", nm.guard, 0);
  nm.inner = read_inner(r, nm.inner);
  nm.extent.min_extent = r.positive("min_extent", nm.extent.min_extent);
  nm.extent.max_extent = r.positive("max_extent", nm.extent.max_extent);
  nm.extent.decay_threshold = r.positive("decay_threshold", nm.extent.decay_threshold);
  nm.dimension_cap = static_cast<std::size_t>(r.integer("dimension_cap", static_cast<int>(nm.dimension_cap), 1));
  r.finish();
  return nm;
}

SurfaceNumerics read_surface_numerics(const json* node, const std::string& path) {
  SurfaceNumerics nm;
  if (!node) return nm;
  Reader r(*node, path);
  nm.order = read_order(r, nm.order);
  nm.points_per_width = r.positive("points_per_width", nm.points_per_width);
  nm.decay_threshold = r.positive("decay_threshold", nm.decay_threshold);
  nm.max_extent = r.positive("max_extent", nm.max_extent);
  nm.tolerance = r.positive("tolerance", nm.tolerance);
  nm.guard = r.integer("guard", nm.guard, 0);
  nm.gate_factor = r.positive("gate_factor", nm.gate_factor);
  nm.dimension_cap = static_cast<std::size_t>(r.integer("dimension_cap", static_cast<int>(nm.dimension_cap), 1));
  r.finish();
  return nm;
}

TransverseOptions read_transverse(const json* node, const std::string& path) {
  TransverseOptions t;
  if (!node) return t;
  Reader r(*node, path);
  t.order = read_order(r, t.order);
  t.tolerance = r.positive("tolerance", t.tolerance);
  t.resolution = r.positive("resolution", t.resolution);
  t.max_refinements = r.integer("max_refinements", t.max_refinements, 0);
  t.decay_threshold = r.positive("decay_threshold", t.decay_threshold);
  t.min_extent = r.positive("min_extent", t.min_extent);
  t.max_extent = r.positive("max_extent", t.max_extent);
  r.finish();
  return t;
}

Experiment read_experiment(const json& node, const std::string& path, std::uint64_t seed) {
  Reader r(node, path);
  Experiment e;
  e.name = r.text("name", "", true);
  if (e.name.empty() || e.name.find_first_of("/\\ ") != std::string::npos) {
    fail(r.at("name"), "must be a non-empty file-name-safe string");
  }
  const std::string type = r.text("type", "", true);
  if (type == "low") {
    LowExperiment x;
    const json* model = r.raw("model");
    if (!model) fail(r.at("model"), "missing");
    x.model = read_model(*model, r.at("model"));
    x.hbar = r.numbers("hbar", true, true);
    for (double v : x.hbar) {
      if (v > 1.0) fail(r.at("hbar"), "values must lie in (0, 1]");
    }
    if (r.has("bands")) x.bands = r.integers("bands", 1);
    if (x.bands.empty()) fail(r.at("bands"), "must not be empty");
    x.levels = r.integer("levels", x.levels, 1);
    x.slope_check = r.boolean("slope_check", x.slope_check);
    x.lower_bound_check = r.boolean("lower_bound_check", x.lower_bound_check);
    x.coefficient_check = r.boolean("coefficient_check", x.coefficient_check);
    x.coefficient_tolerance = r.positive("coefficient_tolerance", x.coefficient_tolerance);
    x.numerics = read_fibered(r.raw("numerics"), r.at("numerics"));
    x.transverse = read_transverse(r.raw("transverse"), r.at("transverse"));
    x.numerics.seed = seed;
    x.transverse.seed = seed;
    e.spec = std::move(x);
  } else if (type == "middle") {
    MiddleExperiment x;
    const json* model = r.raw("model");
    if (!model) fail(r.at("model"), "missing");
    x.model = read_model(*model, r.at("model"));
    x.hbar = r.positive("hbar", x.hbar, true);
    if (x.hbar > 1.0) fail(r.at("hbar"), "must lie in (0, 1]");
    x.bands = r.integers("bands", 1, true);
    if (x.bands.size() < 2) fail(r.at("bands"), "needs at least two bands");
    x.nearest = r.integer("nearest", x.nearest, 1);
    x.max_ratio = r.positive("max_ratio", x.max_ratio);
    x.numerics = read_fibered(r.raw("numerics"), r.at("numerics"));
    x.transverse = read_transverse(r.raw("transverse"), r.at("transverse"));
    x.numerics.seed = seed;
    x.transverse.seed = seed;
    e.spec = std::move(x);
  } else if (type == "surface") {
    SurfaceExperiment x;
    x.potential = r.text("potential", "", true);
    const json* curve = r.raw("curve");
    if (!curve) fail(r.at("curve"), "missing");
    {
      Reader c(*curve, r.at("curve"));
      x.curve_x = c.text("x", "", true);
      x.curve_y = c.text("y", "", true);
      x.orientation = c.integer("orientation", x.orientation, -1);
      if (x.orientation != 1 && x.orientation != -1) fail(c.at("orientation"), "must be 1 or -1");
      x.samples = c.integer("samples", x.samples, 16);
      c.finish();
    }
    x.m = r.integer("m", x.m, 1);
    x.h = r.numbers("h", true, true);
    x.bands = r.integer("bands", x.bands, 1);
    x.alpha_max = r.integer("alpha_max", x.alpha_max, 0);
    x.max_ratio = r.positive("max_ratio", x.max_ratio);
    if (const json* ex = r.raw("expect")) {
      Reader c(*ex, r.at("expect"));
      x.expect_eta0 = c.positive("eta0", x.expect_eta0);
      x.expect_rho = c.positive("rho", x.expect_rho);
      x.expect_tolerance = c.positive("tolerance", x.expect_tolerance);
      c.finish();
    }
    x.numerics = read_surface_numerics(r.raw("numerics"), r.at("numerics"));
    x.transverse = read_transverse(r.raw("transverse"), r.at("transverse"));
    x.numerics.seed = seed;
    x.transverse.seed = seed;
    e.spec = std::move(x);
  } else if (type == "transverse") {
    TransverseExperiment x;
    x.g = r.text("g", "", true);
    x.a = r.positive("a", x.a, true);
    x.levels = r.integer("levels", x.levels, 1);
    if (r.has("scales")) x.scales = r.numbers("scales", true);
    if (x.scales.empty()) fail(r.at("scales"), "must not be empty");
    x.exact = r.numbers("exact", false);
    if (x.exact.size() > static_cast<std::size_t>(x.levels)) fail(r.at("exact"), "longer than levels");
    x.tolerance = r.positive("tolerance", x.tolerance);
    x.options = read_transverse(r.raw("options"), r.at("options"));
    x.options.seed = seed;
    e.spec = std::move(x);
  } else {
    fail(r.at("type"), "expected one of low, middle, surface, transverse");
  }
  r.finish();
  return e;
}

}  // namespace

std::string Experiment::type() const {
  switch (spec.index()) {
    case 0: return "low";
    case 1: return "middle";
    case 2: return "surface";
    default: return "transverse";
  }
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("$: malformed JSON: ") + e.what(), e.byte);
  }
  Reader r(root, "$");
  RunConfig config;
  config.hash = hex64(fnv1a64(text));
  config.schema_version = r.integer("schema_version", 0, 0, true);
  if (config.schema_version != kSchemaVersion) {
    fail(r.at("schema_version"), "unsupported version " + std::to_string(config.schema_version));
  }
  const json* seed = r.raw("seed");
  if (seed) {
    if (!seed->is_number_unsigned()) fail(r.at("seed"), "expected a non-negative integer");
    config.seed = seed->get<std::uint64_t>();
  }
  const json* exps = r.raw("experiments");
  if (!exps || !exps->is_array() || exps->empty()) fail(r.at("experiments"), "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < exps->size(); ++i) {
    const std::string path = r.at("experiments") + "[" + std::to_string(i) + "]";
    Experiment e = read_experiment((*exps)[i], path, config.seed);
    if (!names.insert(e.name).second) fail(path + ".name", "duplicate experiment name " + e.name);
    config.experiments.push_back(std::move(e));
  }
  r.finish();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const RunConfig& config) {
  for (std::size_t i = 0; i < config.experiments.size(); ++i) {
    const Experiment& e = config.experiments[i];
    const std::string path = "$.experiments[" + std::to_string(i) + "]";
    try {
      if (const auto* x = std::get_if<LowExperiment>(&e.spec)) {
        validate_model(x->model);
      } else if (const auto* x = std::get_if<MiddleExperiment>(&e.spec)) {
        validate_model(x->model);
      } else if (const auto* x = std::get_if<SurfaceExperiment>(&e.spec)) {
        const Expr V = Expr::parse(x->potential, {"x", "y"});
        Curve c = build_gamma(Expr::parse(x->curve_x, {"t"}), Expr::parse(x->curve_y, {"t"}), x->orientation,
                              x->samples);
        make_surface_well(V, x->m, std::move(c));
      } else if (const auto* x = std::get_if<TransverseExperiment>(&e.spec)) {
        Expr::parse(x->g, {"y"});
      }
    } catch (const Error& err) {
      if (err.code() == ErrorCode::ConfigError) throw;
      throw Error(ErrorCode::ConfigError, path + ": " + std::string(to_string(err.code())) + ": " + err.what());
    }
  }
}

}  // namespace bolab
