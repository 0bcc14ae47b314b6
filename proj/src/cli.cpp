#include "mpkam/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <Eigen/Core>

#include "mpkam/fields.hpp"
#include "mpkam/kam.hpp"
#include "mpkam/mpp.hpp"
#include "mpkam/om.hpp"
#include "mpkam/parallel.hpp"
#include "mpkam/prob_lab.hpp"
#include "mpkam/systems.hpp"

namespace mpkam::cli {

namespace {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Typed access into a JSON object with field paths in error messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  [[nodiscard]] std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] const json& at(const std::string& key) const { return j_.at(key); }

  void allow_only(const std::set<std::string>& keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (!keys.count(k)) throw ConfigError(where(k), "unknown key");
    }
  }

  [[nodiscard]] double number(const std::string& key, std::optional<double> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(where(key), "required number is missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key), "must be finite");
    return d;
  }

  [[nodiscard]] double positive(const std::string& key, std::optional<double> fallback = {}) const {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(where(key), "must be positive");
    return d;
  }

  [[nodiscard]] std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = {},
                                     std::int64_t min = 0) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(where(key), "required integer is missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key), "must be an integer");
    const auto i = v.get<std::int64_t>();
    if (i < min) throw ConfigError(where(key), "must be >= " + std::to_string(min));
    return i;
  }

  [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(where(key), "must be true or false");
    return j_.at(key).get<bool>();
  }

  [[nodiscard]] std::string string(const std::string& key, std::optional<std::string> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(where(key), "required string is missing");
    }
    if (!j_.at(key).is_string()) throw ConfigError(where(key), "must be a string");
    return j_.at(key).get<std::string>();
  }

  [[nodiscard]] Vector vector(const std::string& key, std::optional<int> dim = {}) const {
    if (!has(key)) throw ConfigError(where(key), "required vector is missing");
    return to_vector(j_.at(key), where(key), dim);
  }

  [[nodiscard]] std::vector<double> numbers(const std::string& key) const {
    if (!has(key)) throw ConfigError(where(key), "required list is missing");
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(where(key), "must be a non-empty list");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key), "entries must be numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  static Vector to_vector(const json& v, const std::string& where, std::optional<int> dim) {
    if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) {
      throw ConfigError(where, "must be a list of 1.." + std::to_string(kMaxDim) + " numbers");
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(where, "entries must be numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    if (!out.allFinite()) throw ConfigError(where, "entries must be finite");
    if (dim && out.size() != *dim) {
      throw ConfigError(where, "must have " + std::to_string(*dim) + " components");
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

std::map<std::string, double> read_params(const Reader& r, const std::string& key) {
  std::map<std::string, double> out;
  if (!r.has(key)) return out;
  const json& p = r.at(key);
  if (!p.is_object()) throw ConfigError(r.where(key), "must be an object of numbers");
  for (const auto& [k, v] : p.items()) {
    if (!v.is_number()) throw ConfigError(r.where(key) + "." + k, "must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

/// Registry lookup of {"name": ..., "params": {...}}.
std::pair<std::string, std::map<std::string, double>> read_component(const Reader& root,
                                                                     const std::string& key,
                                                                     const std::vector<std::string>& names) {
  const Reader r(root.at(key), root.where(key));
  r.allow_only({"name", "params"});
  const std::string name = r.string("name");
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError(r.where("name"), "unknown id '" + name + "' (known: " + known + ")");
  }
  return {name, read_params(r, "params")};
}

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  RunOutcome& outcome;
  json results = json::object();
  bool underflow = false;

  std::filesystem::path file(const std::string& name) {
    outcome.artifacts.push_back(name);
    return cfg.output_dir / name;
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(file(name));
    if (!out) throw Error("cannot write " + (cfg.output_dir / name).string());
    return out;
  }
};

HamiltonianSystem build_system(const RunConfig& cfg) {
  if (!cfg.system) throw ConfigError("system", "required for command " + cfg.command);
  try {
    return systems::make(*cfg.system, cfg.system_params);
  } catch (const ContractViolation& e) {
    throw ConfigError("system.params", e.what());
  }
}

DiffusionField build_field(const RunConfig& cfg, int n) {
  auto params = cfg.field_params;
  if (cfg.field == "identity" && !params.count("n")) params["n"] = n;
  try {
    return fields::make(cfg.field, params);
  } catch (const ContractViolation& e) {
    throw ConfigError("field.params", e.what());
  }
}

Vector require_x0(const RunConfig& cfg, int dim) {
  if (!cfg.x0) throw ConfigError("x0", "required for command " + cfg.command);
  if (cfg.x0->size() != dim) {
    throw ConfigError("x0", "must have " + std::to_string(dim) + " components");
  }
  return *cfg.x0;
}

/// Reference path: flow | constant | straight | csv.
DiscretePath read_path(const json& desc, const std::string& where, const RunConfig& cfg,
                       const HamiltonianSystem& sys) {
  const Reader r(desc, where);
  const std::string kind = r.string("kind");
  const int dim = sys.dim();
  if (kind == "flow") {
    r.allow_only({"kind", "x0"});
    const Vector x0 = r.has("x0") ? r.vector("x0", dim) : require_x0(cfg, dim);
    return deterministic_flow(sys, x0, cfg.T, cfg.N);
  }
  if (kind == "constant") {
    r.allow_only({"kind", "point"});
    return DiscretePath::constant(cfg.T, cfg.N, r.vector("point", dim));
  }
  if (kind == "straight") {
    r.allow_only({"kind", "from", "to"});
    return DiscretePath::straight_line(cfg.T, cfg.N, r.vector("from", dim), r.vector("to", dim));
  }
  if (kind == "csv") {
    r.allow_only({"kind", "file"});
    DiscretePath p = read_path_csv(std::filesystem::path(r.string("file")));
    if (p.dim() != dim) throw ConfigError(r.where("file"), "path dimension differs from the system");
    if (p.N() != cfg.N || std::abs(p.T - cfg.T) > 1e-12 * cfg.T) {
      throw ConfigError(r.where("file"), "path grid differs from grid.T / grid.N");
    }
    return p;
  }
  throw ConfigError(r.where("kind"), "must be one of flow, constant, straight, csv");
}

TubeSpec read_tube(const Reader& opts, const std::string& key, const RunConfig& cfg,
                   const HamiltonianSystem& sys) {
  TubeSpec t;
  t.reference = read_path(opts.at(key), opts.where(key), cfg, sys);
  t.epsilon = opts.positive("epsilon");
  const std::string norm = opts.string("norm", "max_component");
  if (norm == "max_component") {
    t.norm = TubeNorm::max_component;
  } else if (norm == "euclidean") {
    t.norm = TubeNorm::euclidean;
  } else {
    throw ConfigError(opts.where("norm"), "must be max_component or euclidean");
  }
  t.bridge_correction = opts.boolean("bridge_correction", true);
  return t;
}

json breakdown_json(const ActionBreakdown& a) {
  return {{"quadratic_term", a.quadratic_term}, {"divergence_term", a.divergence_term},
          {"total", a.total}, {"N", a.N}, {"quadrature", a.quadrature}};
}

void cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"domain_half_width"});
  const auto sys = build_system(cfg);
  const auto field = build_field(cfg, sys.n());
  const Vector x0 = require_x0(cfg, sys.dim());
  SimulationOptions so;
  so.scheme = cfg.scheme;
  if (opts.has("domain_half_width")) {
    so.domain = DomainBox::cube(sys.dim(), opts.positive("domain_half_width"));
  }
  const auto out = ensemble(sys, field, x0, cfg.T, cfg.N, NoiseConfig{cfg.gamma, cfg.seed, cfg.M}, so);
  auto f = ctx.open("trajectories.csv");
  write_ensemble_csv(f, out);
  std::size_t exits = 0;
  for (const auto& o : out) exits += o.exited() ? 1 : 0;
  ctx.results = {{"replicates", out.size()}, {"domain_exits", exits}};
}

void cmd_om_eval(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"path"});
  const auto sys = build_system(cfg);
  const auto field = build_field(cfg, sys.n());
  if (!opts.has("path")) throw ConfigError("options.path", "required path description");
  const DiscretePath path = read_path(opts.at("path"), "options.path", cfg, sys);
  const auto action = om_action(sys, field, path);
  const Vector x0 = cfg.x0 ? *cfg.x0 : Vector(path.node(0));
  const auto rate = rate_function(sys, field, path, x0);
  json res{{"action", breakdown_json(action)}};
  res["rate_function"] = rate.finite ? json(rate.value) : json("inf");
  if (path.N() >= 3) res["euler_lagrange_max"] = euler_lagrange_residual(sys, field, path).max;
  auto f = ctx.open("path.csv");
  write_csv(f, path);
  ctx.results = res;
}

void cmd_mpp(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"xT", "gradient_tolerance", "max_iterations", "memory", "verify"});
  const auto sys = build_system(cfg);
  const auto field = build_field(cfg, sys.n());
  const Vector x0 = require_x0(cfg, sys.dim());
  MppOptions mo;
  mo.gradient_tolerance = opts.positive("gradient_tolerance", mo.gradient_tolerance);
  mo.max_iterations = static_cast<int>(opts.integer("max_iterations", mo.max_iterations, 1));
  mo.memory = static_cast<int>(opts.integer("memory", mo.memory, 1));
  if (cfg.N < 3) throw ConfigError("grid.N", "mpp needs N >= 3");
  // endpoint defaults to the flow endpoint, i.e. a point on the orbit
  const Vector xT = opts.has("xT") ? opts.vector("xT", sys.dim())
                                   : Vector(deterministic_flow(sys, x0, cfg.T, cfg.N).node(cfg.N));
  const auto res = solve_mpp(sys, field, x0, xT, cfg.T, cfg.N, std::nullopt, mo);
  auto f = ctx.open("mpp_path.csv");
  write_csv(f, res.path);
  json out{{"converged", res.converged},
           {"iterations", res.iterations},
           {"gradient_norm", res.gradient_norm},
           {"action", breakdown_json(res.action)}};
  if (opts.boolean("verify", false)) {
    const auto rep = verify_flow_coincidence(sys, field, x0, cfg.T, cfg.N, mo);
    out["flow_coincidence"] = {{"columns_hamiltonian", rep.columns_hamiltonian},
                               {"checked", rep.checked},
                               {"pass", rep.pass},
                               {"action", rep.action},
                               {"distance", rep.distance},
                               {"divergence_term", rep.divergence_term},
                               {"status", rep.status}};
  }
  ctx.results = out;
}

void cmd_tube(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"reference", "compare", "epsilon", "norm", "bridge_correction", "domain_half_width"});
  if (cfg.M < 100) throw ConfigError("noise.M", "tube estimates need M >= 100");
  const auto sys = build_system(cfg);
  const auto field = build_field(cfg, sys.n());
  if (!opts.has("reference")) throw ConfigError("options.reference", "required path description");
  const TubeSpec tube = read_tube(opts, "reference", cfg, sys);
  TubeMcOptions mo;
  mo.scheme = cfg.scheme;
  if (opts.has("domain_half_width")) {
    mo.domain = DomainBox::cube(sys.dim(), opts.positive("domain_half_width"));
  }
  const NoiseConfig nc{cfg.gamma, cfg.seed, cfg.M};
  auto f = ctx.open("tube.csv");
  f << "tube,p_hat,se,hits,M,seed,gamma\n";
  auto row = [&](const char* name, const MCEstimate& e) {
    f << name << ',' << format_double(e.p_hat) << ',' << format_double(e.std_err) << ',' << e.hits
      << ',' << e.M << ',' << e.seed << ',' << format_double(e.gamma) << '\n';
    if (e.underflow) {
      ctx.underflow = true;
      ctx.log << "advisory: tube '" << name << "' had zero hits; log p_hat is undefined\n";
    }
  };
  if (opts.has("compare")) {
    const TubeSpec other = read_tube(opts, "compare", cfg, sys);
    const auto r = tube_ratio_mc(sys, field, tube, other, nc, cfg.T, cfg.N, mo);
    row("reference", r.first);
    row("compare", r.second);
    ctx.results = {{"reference", to_json(r.first)},
                   {"compare", to_json(r.second)},
                   {"joint_hits", r.joint_hits},
                   {"ratio", r.ratio},
                   {"ratio_se", r.std_err},
                   {"om_prediction", cfg.gamma > 0.0 ? json(om_ratio_prediction(sys, field.scaled(cfg.gamma),
                                                                                tube.reference, other.reference))
                                                     : json(nullptr)}};
  } else {
    const auto e = tube_probability_mc(sys, field, tube, nc, cfg.T, cfg.N, mo);
    row("reference", e);
    ctx.results = {{"reference", to_json(e)}};
  }
  ctx.results["epsilon"] = tube.epsilon;
  ctx.results["norm"] = to_string(tube.norm);
  ctx.results["bridge_correction"] = tube.bridge_correction;
}

void cmd_ldp(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"reference", "epsilon", "norm", "bridge_correction", "gammas"});
  if (cfg.M < 100) throw ConfigError("noise.M", "tube estimates need M >= 100");
  const auto gammas = opts.numbers("gammas");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) throw ConfigError("options.gammas", "must be positive");
    if (i > 0 && !(gammas[i] < gammas[i - 1])) {
      throw ConfigError("options.gammas", "must be strictly descending");
    }
  }
  const auto sys = build_system(cfg);
  const auto field = build_field(cfg, sys.n());
  if (!opts.has("reference")) throw ConfigError("options.reference", "required path description");
  const TubeSpec tube = read_tube(opts, "reference", cfg, sys);
  TubeMcOptions mo;
  mo.scheme = cfg.scheme;
  try {
    const auto curve = ldp_curve(sys, field, tube, gammas, cfg.M, cfg.seed, cfg.T, cfg.N, mo);
    auto f = ctx.open("ldp.csv");
    write_ldp_csv(f, curve);
    for (const auto& p : curve.points) {
      if (!p.usable) {
        ctx.underflow = ctx.underflow || p.estimate.underflow;
        ctx.log << "advisory: gamma " << format_double(p.gamma) << " has " << p.estimate.hits
                << " hits and is unusable\n";
      }
    }
    ctx.results = ldp_summary(curve);
  } catch (const EmptyCurveError&) {
    ctx.underflow = true;
    throw;
  }
}

void cmd_kam_scan(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"etas", "initial_actions", "drift_tol", "osc_tol_fraction", "l", "nu", "alpha",
                   "k_max", "c", "field_half_width"});
  const auto sys = build_system(cfg);
  if (!sys.nearly_integrable()) throw ConfigError("system", "kam-scan needs a nearly integrable system");
  const int n = sys.n();
  const auto field = build_field(cfg, n);
  ScanOptions so;
  so.params.n = n;
  so.params.l = opts.positive("l", so.params.l);
  so.params.nu = opts.positive("nu", so.params.nu);
  so.params.alpha = opts.positive("alpha", so.params.alpha);
  so.params.k_max = static_cast<int>(opts.integer("k_max", so.params.k_max, 1));
  so.params.c = opts.positive("c", so.params.c);
  try {
    so.params.validate();
  } catch (const InvalidParameters& e) {
    throw ConfigError("options", e.what());
  }
  so.drift_tol = opts.positive("drift_tol", so.drift_tol);
  so.osc_tol_fraction = opts.positive("osc_tol_fraction", so.osc_tol_fraction);
  if (opts.has("field_half_width")) {
    so.field_box = DomainBox::cube(field.dim(), opts.positive("field_half_width"));
  }
  const auto etas = opts.numbers("etas");
  std::vector<Vector> actions;
  if (!opts.has("initial_actions")) throw ConfigError("options.initial_actions", "required list");
  const json& ia = opts.at("initial_actions");
  if (!ia.is_array() || ia.empty()) throw ConfigError("options.initial_actions", "must be a non-empty list");
  for (std::size_t i = 0; i < ia.size(); ++i) {
    actions.push_back(Reader::to_vector(ia[i], "options.initial_actions[" + std::to_string(i) + "]", n));
  }
  const auto rep = torus_persistence_scan(sys, field, etas, actions, cfg.T, cfg.N, so);
  auto f = ctx.open("persistence.csv");
  write_persistence_csv(f, rep);
  ctx.results = persistence_summary(rep);
}

void cmd_check_conditions(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Reader opts(cfg.options, "options");
  opts.allow_only({"box", "samples"});
  std::optional<HamiltonianSystem> sys;
  if (cfg.system) sys.emplace(build_system(cfg));
  const int n = sys ? sys->n() : (cfg.field_params.count("n") ? static_cast<int>(cfg.field_params.at("n")) : 1);
  const auto field = build_field(cfg, n);
  if (sys && sys->dim() != field.dim()) throw ConfigError("field", "dimension differs from the system");
  const auto samples = static_cast<std::size_t>(opts.integer("samples", kDefaultConditionSamples, 1));
  DomainBox box = field.validity_box();
  if (opts.has("box")) {
    const Reader b(opts.at("box"), "options.box");
    b.allow_only({"lo", "hi"});
    box = DomainBox{b.vector("lo", field.dim()), b.vector("hi", field.dim())};
    if (!(box.lo.array() < box.hi.array()).all()) throw ConfigError("options.box", "need lo < hi");
  }
  ConditionReport rep;
  if (sys) rep.merge(check_lipschitz(*sys, box, samples));
  rep.merge(check_ellipticity(field, box, samples));
  rep.merge(check_frobenius(field, box, samples));
  rep.merge(check_c3_witness(field, samples));
  rep.merge(check_hamiltonian_columns(field, box, samples));
  auto f = ctx.open("conditions.csv");
  f << "condition,verdict,worst_magnitude,tolerance,samples\n";
  for (const auto& r : rep.results) {
    f << r.condition << ',' << to_string(r.verdict) << ',' << format_double(r.worst_magnitude) << ','
      << format_double(r.tolerance) << ',' << r.samples << '\n';
  }
  ctx.results = rep.to_json();
}

void write_manifest(const RunConfig* cfg, const json& raw, const RunOutcome& outcome,
                    const json& results, double seconds, const std::filesystem::path& dir) {
  json m;
  m["config"] = raw;
  if (cfg) {
    m["seed"] = cfg->seed;
    m["command"] = cfg->command;
  }
  m["versions"] = {{"mpkam", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__},
                   {"cxx", __cplusplus}};
  m["threads"] = thread_count();
  m["wall_time_seconds"] = seconds;
  m["exit_code"] = outcome.exit_code;
  m["message"] = outcome.message;
  m["artifacts"] = outcome.artifacts;
  m["results"] = results;
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

Scheme parse_scheme(const std::string& s) {
  if (s == "euler_maruyama") return Scheme::euler_maruyama;
  if (s == "stratonovich_heun") return Scheme::stratonovich_heun;
  throw ConfigError("noise.scheme", "must be euler_maruyama or stratonovich_heun");
}

}  // namespace

RunConfig parse_config(const json& config) {
  if (config.is_null() || (config.is_object() && config.empty())) {
    throw ConfigError("<root>", "config is empty");
  }
  const Reader root(config, "");
  root.allow_only({"command", "system", "field", "grid", "noise", "x0", "options", "output_dir",
                   "escalate_underflow"});
  RunConfig cfg;
  cfg.raw = config;
  cfg.command = root.string("command");
  if (std::find(commands().begin(), commands().end(), cfg.command) == commands().end()) {
    throw ConfigError("command", "unknown command '" + cfg.command + "'");
  }
  if (root.has("system")) {
    auto [name, params] = read_component(root, "system", systems::names());
    cfg.system = name;
    cfg.system_params = params;
  } else if (cfg.command != "check-conditions") {
    throw ConfigError("system", "required for command " + cfg.command);
  }
  cfg.field = "identity";
  if (root.has("field")) {
    auto [name, params] = read_component(root, "field", fields::names());
    cfg.field = name;
    cfg.field_params = params;
  }
  if (root.has("grid")) {
    const Reader g(root.at("grid"), "grid");
    g.allow_only({"T", "N"});
    cfg.T = g.positive("T", cfg.T);
    cfg.N = static_cast<int>(g.integer("N", cfg.N, 1));
  }
  if (root.has("noise")) {
    const Reader nz(root.at("noise"), "noise");
    nz.allow_only({"gamma", "M", "seed", "scheme"});
    cfg.gamma = nz.number("gamma", cfg.gamma);
    if (cfg.gamma < 0.0) throw ConfigError("noise.gamma", "must be >= 0");
    cfg.M = static_cast<std::size_t>(nz.integer("M", static_cast<std::int64_t>(cfg.M), 1));
    cfg.seed = static_cast<std::uint64_t>(nz.integer("seed", 0, 0));
    cfg.scheme = parse_scheme(nz.string("scheme", "euler_maruyama"));
  }
  if (root.has("x0")) cfg.x0 = Reader::to_vector(root.at("x0"), "x0", std::nullopt);
  if (root.has("options")) {
    if (!root.at("options").is_object()) throw ConfigError("options", "must be an object");
    cfg.options = root.at("options");
  }
  cfg.output_dir = root.string("output_dir", cfg.output_dir.string());
  cfg.escalate_underflow = root.boolean("escalate_underflow", false);
  return cfg;
}

RunOutcome run(const RunConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome outcome;
  Context ctx{config, log, outcome};
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    outcome.exit_code = kValidation;
    outcome.message = "output_dir: cannot create directory: " + ec.message();
    log << "error: " << outcome.message << '\n';
    return outcome;
  }
  try {
    const std::string& c = config.command;
    if (c == "simulate") cmd_simulate(ctx);
    else if (c == "om-eval") cmd_om_eval(ctx);
    else if (c == "mpp") cmd_mpp(ctx);
    else if (c == "tube") cmd_tube(ctx);
    else if (c == "ldp") cmd_ldp(ctx);
    else if (c == "kam-scan") cmd_kam_scan(ctx);
    else cmd_check_conditions(ctx);
    outcome.exit_code = (ctx.underflow && config.escalate_underflow) ? kUnderflow : kSuccess;
    if (ctx.underflow) outcome.message = "Monte Carlo underflow advisory";
  } catch (const ContractViolation& e) {
    outcome.exit_code = kValidation;
    outcome.message = e.what();
  } catch (const NumericDomainError& e) {
    outcome.exit_code = (ctx.underflow && config.escalate_underflow) ? kUnderflow : kNumerical;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = kNumerical;
    outcome.message = e.what();
  }
  if (outcome.exit_code != kSuccess) log << "error: " << outcome.message << '\n';
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(&config, config.raw, outcome, ctx.results, secs, config.output_dir);
  return outcome;
}

RunOutcome run_json(const json& config, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = parse_config(config);
  } catch (const ContractViolation& e) {
    RunOutcome o;
    o.exit_code = kValidation;
    o.message = e.what();
    log << "error: " << o.message << '\n';
    return o;
  }
  return run(cfg, log);
}

}  // namespace mpkam::cli
