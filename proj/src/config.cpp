#include "hfv/config.hpp"

#include "hfv/expression.hpp"
#include "hfv/mesh_io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hfv {

namespace {

struct RawConfig {
  // section -> key -> value string (already trimmed)
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::map<std::string, std::vector<std::string>> consumed;

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      raw.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (raw.sections[section].count(key))
      throw ConfigError("config: duplicate key " + section + "." + key);
    raw.sections[section][key] = value;
  }
  return raw;
}

class Reader {
 public:
  explicit Reader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has(const std::string& section, const std::string& key) {
    return raw_.has(section, key);
  }

  std::string str(const std::string& section, const std::string& key, const std::string& dflt) {
    if (!raw_.has(section, key)) return dflt;
    mark(section, key);
    return raw_.sections[section][key];
  }

  double num(const std::string& section, const std::string& key, double dflt) {
    if (!raw_.has(section, key)) return dflt;
    return parse_num(section, key, str(section, key, ""));
  }

  int integer(const std::string& section, const std::string& key, int dflt) {
    const double v = num(section, key, dflt);
    if (v != std::floor(v))
      throw ConfigError("config: " + section + "." + key + " must be an integer");
    return static_cast<int>(v);
  }

  bool flag(const std::string& section, const std::string& key, bool dflt) {
    const std::string v = str(section, key, dflt ? "on" : "off");
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("config: " + section + "." + key + " must be on or off");
  }

  std::vector<double> numbers(const std::string& section, const std::string& key,
                              std::vector<double> dflt) {
    if (!raw_.has(section, key)) return dflt;
    std::istringstream is(str(section, key, ""));
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_num(section, key, tok));
    if (out.empty()) throw ConfigError("config: " + section + "." + key + " is empty");
    return out;
  }

  /// After reading everything: any leftover key is unknown.
  void reject_unknown() const {
    for (const auto& [section, keys] : raw_.sections)
      for (const auto& [key, value] : keys) {
        const auto it = consumed_.find(section);
        if (it == consumed_.end() || !it->second.count(key))
          throw ConfigError("config: unknown key " + section + "." + key);
      }
  }

 private:
  void mark(const std::string& section, const std::string& key) {
    consumed_[section].insert(key);
  }
  double parse_num(const std::string& section, const std::string& key, const std::string& tok) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != tok.size())
      throw ConfigError("config: " + section + "." + key + ": not a number: '" + tok + "'");
    return v;
  }

  RawConfig raw_;
  std::map<std::string, std::set<std::string>> consumed_;
};

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  Reader r(parse_raw(text));
  RunConfig c;

  c.problem.type = r.str("problem", "type", "test1");
  if (c.problem.type != "test1" && c.problem.type != "test2" && c.problem.type != "custom")
    throw ConfigError("config: problem.type must be test1, test2 or custom");
  c.problem.p = r.num("problem", "p", 0.2);
  c.problem.v = r.num("problem", "v", 0.8);
  c.problem.delta = r.num("problem", "delta", 0.01);
  if (c.problem.type == "test2" && !(c.problem.delta > 0.0))
    throw ConfigError("config: problem.delta must be positive");
  if (c.problem.type == "test2" && !(c.problem.v > 0.0))
    throw ConfigError("config: problem.v must be positive");

  const bool custom = c.problem.type == "custom";
  for (const char* k : {"beta", "reaction", "lambda", "velocity", "q", "u0", "g", "exact",
                        "dim", "domain"})
    if (!custom && r.has("problem", k))
      throw ConfigError(std::string("config: problem.") + k + " is only valid for type=custom");
  if (custom) {
    c.problem.beta = r.str("problem", "beta", "linear");
    if (c.problem.beta != "linear" && c.problem.beta != "sqrt" &&
        c.problem.beta != "linear_plus_sqrt")
      throw ConfigError("config: problem.beta must be linear, sqrt or linear_plus_sqrt");
    c.problem.reaction = r.str("problem", "reaction", "zero");
    if (c.problem.reaction != "zero" && c.problem.reaction != "half_sqrt")
      throw ConfigError("config: problem.reaction must be zero or half_sqrt");
    c.problem.dim = r.integer("problem", "dim", 3);
    if (c.problem.dim != 2 && c.problem.dim != 3)
      throw ConfigError("config: problem.dim must be 2 or 3");
    c.problem.lambda = r.numbers("problem", "lambda", {1.0});
    const std::size_t dd = static_cast<std::size_t>(c.problem.dim) * c.problem.dim;
    if (c.problem.lambda.size() != 1 && c.problem.lambda.size() != dd)
      throw ConfigError("config: problem.lambda needs 1 or dim*dim entries");
    c.problem.velocity = r.numbers("problem", "velocity", {0.0, 0.0, 0.0});
    if (c.problem.velocity.size() != static_cast<std::size_t>(c.problem.dim))
      throw ConfigError("config: problem.velocity needs dim entries");
    c.problem.q = r.str("problem", "q", "");
    c.problem.u0 = r.str("problem", "u0", "");
    c.problem.g = r.str("problem", "g", "");
    c.problem.exact = r.str("problem", "exact", "");
    c.problem.domain = r.numbers("problem", "domain", {0, 1, 0, 1, 0, 1});
    if (c.problem.domain.size() != 2 * static_cast<std::size_t>(c.problem.dim))
      throw ConfigError("config: problem.domain needs 2*dim entries (lo hi per axis)");
    for (int a = 0; a < c.problem.dim; ++a)
      if (!(c.problem.domain[2 * a + 1] > c.problem.domain[2 * a]))
        throw ConfigError("config: problem.domain axis " + std::to_string(a + 1) +
                          " has non-positive extent");
  }

  c.mesh.source = r.str("mesh", "source", "generate");
  if (c.mesh.source != "generate" && c.mesh.source != "file")
    throw ConfigError("config: mesh.source must be generate or file");
  c.mesh.file = r.str("mesh", "file", "");
  if (c.mesh.source == "file") {
    if (c.mesh.file.empty()) throw ConfigError("config: mesh.file is required for source=file");
    if (!std::ifstream(c.mesh.file).good())
      throw ConfigError("config: mesh.file does not exist: " + c.mesh.file);
  }
  {
    const auto res = r.numbers("mesh", "resolution", {0, 0, 0});
    if (res.size() > 3) throw ConfigError("config: mesh.resolution needs at most 3 entries");
    for (std::size_t a = 0; a < res.size(); ++a) {
      if (res[a] != std::floor(res[a]) || res[a] < 0)
        throw ConfigError("config: mesh.resolution entries must be non-negative integers");
      c.mesh.resolution[a] = static_cast<int>(res[a]);
    }
  }
  {
    const bool given = r.has("mesh", "refine_probability");
    c.mesh.refine_probability = r.num("mesh", "refine_probability", -1.0);
    if (given &&
        (c.mesh.refine_probability < 0.0 || c.mesh.refine_probability > 1.0))
      throw ConfigError("config: mesh.refine_probability must be in [0,1]");
  }
  {
    const double s = r.num("mesh", "seed", 1.0);
    if (s < 0 || s != std::floor(s)) throw ConfigError("config: mesh.seed must be a non-negative integer");
    c.mesh.seed = static_cast<std::uint64_t>(s);
  }

  c.T = r.num("time", "T", 1.0);
  if (!(c.T > 0.0)) throw ConfigError("config: time.T must be positive");
  c.N = r.integer("time", "N", 50);
  if (c.N < 1) throw ConfigError("config: time.N must be >= 1");

  c.solver.newton_abs_tol = r.num("solver", "newton_abs_tol", 1e-10);
  if (!(c.solver.newton_abs_tol > 0.0))
    throw ConfigError("config: solver.newton_abs_tol must be positive");
  c.solver.newton_rel_tol = r.num("solver", "newton_rel_tol", 0.0);
  if (c.solver.newton_rel_tol < 0.0)
    throw ConfigError("config: solver.newton_rel_tol must be >= 0");
  c.solver.newton_max_iter = r.integer("solver", "newton_max_iter", 50);
  if (c.solver.newton_max_iter < 1)
    throw ConfigError("config: solver.newton_max_iter must be >= 1");
  c.solver.max_halvings = r.integer("solver", "max_halvings", 8);
  if (c.solver.max_halvings < 0) throw ConfigError("config: solver.max_halvings must be >= 0");
  c.solver.condense = r.flag("solver", "condense", true);
  c.solver.switch_variables = r.str("solver", "switch_variables", "auto");
  if (c.solver.switch_variables != "auto" && c.solver.switch_variables != "on" &&
      c.solver.switch_variables != "off")
    throw ConfigError("config: solver.switch_variables must be auto, on or off");
  {
    const std::string a = r.str("solver", "alpha", "auto");
    if (a == "auto") {
      c.solver.alpha = 0.0;
    } else {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(a, &used);
      } catch (const std::exception&) {
        used = std::string::npos;
      }
      if (used != a.size() || !(v > 0.0))
        throw ConfigError("config: solver.alpha must be 'auto' or a positive number");
      c.solver.alpha = v;
    }
  }

  c.output.dir = r.str("output", "dir", "out");
  c.output.snapshot_stride = r.integer("output", "snapshot_stride", 0);
  if (c.output.snapshot_stride < 0)
    throw ConfigError("config: output.snapshot_stride must be >= 0");
  c.output.vtk = r.flag("output", "vtk", true);

  c.convergence.levels = r.integer("convergence", "levels", 3);
  if (c.convergence.levels < 1) throw ConfigError("config: convergence.levels must be >= 1");
  c.convergence.probabilities = r.numbers("convergence", "probabilities", {});
  for (double p : c.convergence.probabilities)
    if (p < 0.0 || p > 1.0)
      throw ConfigError("config: convergence.probabilities entries must be in [0,1]");
  {
    const auto seeds = r.numbers("convergence", "seeds", {});
    for (double s : seeds) {
      if (s < 0 || s != std::floor(s))
        throw ConfigError("config: convergence.seeds entries must be non-negative integers");
      c.convergence.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }

  r.reject_unknown();

  // Expressions must parse at configuration time.
  const std::pair<const char*, const std::string*> exprs[] = {
      {"q", &c.problem.q}, {"u0", &c.problem.u0}, {"g", &c.problem.g},
      {"exact", &c.problem.exact}};
  for (const auto& [key, text_expr] : exprs) {
    if (text_expr->empty()) continue;
    try {
      Expression::parse(*text_expr);
    } catch (const ExpressionError& e) {
      throw ConfigError(std::string("config: problem.") + key + ": " + e.what());
    }
  }
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string RunConfig::echo() const {
  std::ostringstream os;
  os << "[problem]\n";
  os << "type = " << problem.type << "\n";
  if (problem.type == "test2") {
    os << "p = " << fmt_num(problem.p) << "\n";
    os << "v = " << fmt_num(problem.v) << "\n";
    os << "delta = " << fmt_num(problem.delta) << "\n";
  }
  if (problem.type == "custom") {
    os << "beta = " << problem.beta << "\n";
    os << "reaction = " << problem.reaction << "\n";
    os << "dim = " << problem.dim << "\n";
    os << "domain =";
    for (double v : problem.domain) os << " " << fmt_num(v);
    os << "\nlambda =";
    for (double v : problem.lambda) os << " " << fmt_num(v);
    os << "\nvelocity =";
    for (double v : problem.velocity) os << " " << fmt_num(v);
    os << "\n";
    if (!problem.q.empty()) os << "q = " << problem.q << "\n";
    if (!problem.u0.empty()) os << "u0 = " << problem.u0 << "\n";
    if (!problem.g.empty()) os << "g = " << problem.g << "\n";
    if (!problem.exact.empty()) os << "exact = " << problem.exact << "\n";
  }
  os << "\n[mesh]\n";
  os << "source = " << mesh.source << "\n";
  if (mesh.source == "file") {
    os << "file = " << mesh.file << "\n";
  } else {
    // Effective generation parameters so the record is self-contained.
    const auto res = effective_resolution(*this);
    os << "resolution = " << res[0] << " " << res[1] << " " << res[2] << "\n";
    os << "refine_probability = " << fmt_num(effective_probability(*this)) << "\n";
    os << "seed = " << mesh.seed << "\n";
  }
  os << "\n[time]\n";
  os << "T = " << fmt_num(T) << "\n";
  os << "N = " << N << "\n";
  os << "\n[solver]\n";
  os << "newton_abs_tol = " << fmt_num(solver.newton_abs_tol) << "\n";
  os << "newton_rel_tol = " << fmt_num(solver.newton_rel_tol) << "\n";
  os << "newton_max_iter = " << solver.newton_max_iter << "\n";
  os << "max_halvings = " << solver.max_halvings << "\n";
  os << "condense = " << (solver.condense ? "on" : "off") << "\n";
  os << "switch_variables = " << solver.switch_variables << "\n";
  os << "alpha = " << (solver.alpha > 0.0 ? fmt_num(solver.alpha) : std::string("auto")) << "\n";
  os << "\n[output]\n";
  os << "dir = " << output.dir << "\n";
  os << "snapshot_stride = " << output.snapshot_stride << "\n";
  os << "vtk = " << (output.vtk ? "on" : "off") << "\n";
  os << "\n[convergence]\n";
  os << "levels = " << convergence.levels << "\n";
  if (!convergence.probabilities.empty()) {
    os << "probabilities =";
    for (double p : convergence.probabilities) os << " " << fmt_num(p);
    os << "\n";
  }
  if (!convergence.seeds.empty()) {
    os << "seeds =";
    for (auto s : convergence.seeds) os << " " << s;
    os << "\n";
  }
  return os.str();
}

ProblemSpec make_problem(const ProblemConfig& pc) {
  if (pc.type == "test1") return make_test1();
  if (pc.type == "test2") return make_test2(pc.p, pc.v, pc.delta);

  ProblemSpec spec;
  spec.name = "custom";
  spec.dim = pc.dim;
  for (int a = 0; a < pc.dim; ++a) {
    spec.domain_lo[a] = pc.domain[2 * a];
    spec.domain_hi[a] = pc.domain[2 * a + 1];
  }
  if (pc.dim == 2) spec.domain_lo[2] = spec.domain_hi[2] = 0.0;

  if (pc.beta == "linear") {
    spec.beta.beta.value = [](double u) { return u; };
    spec.beta.beta.derivative = [](double) { return 1.0; };
    spec.beta.inverse = spec.beta.beta;
    spec.beta.lower_slope = 1.0;
    spec.beta.slope_range_hi = 10.0;
    spec.beta.linear = true;
  } else {
    ProblemSpec donor = pc.beta == "sqrt" ? make_test2() : make_test1();
    spec.beta = donor.beta;
  }
  if (pc.reaction == "zero") {
    spec.reaction.F.value = [](double) { return 0.0; };
    spec.reaction.F.derivative = [](double) { return 0.0; };
  } else {
    spec.reaction = make_test1().reaction;
  }

  Eigen::Matrix3d lam = Eigen::Matrix3d::Identity();
  if (pc.lambda.size() == 1) {
    lam *= pc.lambda[0];
  } else {
    for (int i = 0; i < pc.dim; ++i)
      for (int j = 0; j < pc.dim; ++j) lam(i, j) = pc.lambda[i * pc.dim + j];
    if (pc.dim == 2) lam(2, 2) = 1.0;
  }
  if ((lam - lam.transpose()).norm() > 1e-12 * std::max(1.0, lam.norm()))
    throw ConfigError("config: problem.lambda must be symmetric");
  spec.diffusion = [lam](const Vec3&, int) { return lam; };
  {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(lam, Eigen::EigenvaluesOnly);
    spec.lambda_lo = es.eigenvalues().minCoeff();
    spec.lambda_hi = es.eigenvalues().maxCoeff();
  }

  Vec3 vel = Vec3::Zero();
  for (int a = 0; a < pc.dim; ++a) vel[a] = pc.velocity[a];
  spec.velocity = [vel](const Vec3&, int) { return vel; };
  spec.n_regions = 1;
  spec.region_of = [](const Vec3&) { return 0; };

  auto compile = [](const std::string& text) {
    const Expression e = Expression::parse(text);
    return [e](const Vec3& x, double t) { return e.eval(x, t); };
  };
  spec.source = pc.q.empty()
                    ? std::function<double(const Vec3&, double)>(
                          [](const Vec3&, double) { return 0.0; })
                    : compile(pc.q);
  if (pc.u0.empty()) {
    spec.initial = [](const Vec3&) { return 0.0; };
  } else {
    auto f = compile(pc.u0);
    spec.initial = [f](const Vec3& x) { return f(x, 0.0); };
  }
  if (!pc.exact.empty()) spec.exact = compile(pc.exact);
  if (!pc.g.empty()) {
    spec.dirichlet = compile(pc.g);
  } else if (spec.has_exact()) {
    spec.dirichlet = spec.exact;
  } else {
    spec.dirichlet = [](const Vec3&, double) { return 0.0; };
  }
  spec.boundary_kind = [](const Vec3&) { return ProblemSpec::BC::dirichlet; };
  return spec;
}

std::array<int, 3> effective_resolution(const RunConfig& config) {
  std::array<int, 3> res = config.mesh.resolution;
  if (res[0] == 0) {
    if (config.problem.type == "test1") res = {4, 2, 4};
    else if (config.problem.type == "test2") res = {16, 16, 16};
    else res = {8, 8, 8};
  }
  const int dim = config.problem.type == "custom" ? config.problem.dim : 3;
  for (int a = 0; a < dim; ++a)
    if (res[a] < 1) throw ConfigError("config: mesh.resolution must be >= 1 per axis");
  return res;
}

double effective_probability(const RunConfig& config) {
  if (config.mesh.refine_probability >= 0.0) return config.mesh.refine_probability;
  return config.problem.type == "test1" ? 0.4 : 0.0;
}

Mesh make_mesh(const RunConfig& config) {
  if (config.mesh.source == "file") return read_mesh(config.mesh.file);
  const ProblemSpec spec = make_problem(config.problem);
  Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, effective_resolution(config),
                             spec.dim);
  const double p = effective_probability(config);
  if (p > 0.0) mesh = refine_random(mesh, p, config.mesh.seed);
  return mesh;
}

SolverSetup make_solver_setup(const RunConfig& config) {
  SolverSetup setup;
  setup.newton.abs_tol = config.solver.newton_abs_tol;
  setup.newton.rel_tol = config.solver.newton_rel_tol;
  setup.newton.max_iter = config.solver.newton_max_iter;
  setup.newton.max_halvings = config.solver.max_halvings;
  setup.newton.condense = config.solver.condense;
  if (config.solver.switch_variables == "auto") {
    const ProblemSpec spec = make_problem(config.problem);
    setup.newton.switch_variables = !spec.beta.linear;
  } else {
    setup.newton.switch_variables = config.solver.switch_variables == "on";
  }
  setup.alpha = config.solver.alpha;
  return setup;
}

}  // namespace hfv
