// Run configuration: a flat, sectioned key-value text file. Unknown keys are
// rejected; defaults are materialized so the echoed record re-runs the job.

#ifndef HFV_CONFIG_HPP
#define HFV_CONFIG_HPP

#include "hfv/mesh.hpp"
#include "hfv/problem.hpp"
#include "hfv/solver.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hfv {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ProblemConfig {
  std::string type = "test1";  // test1 | test2 | custom
  double p = 0.2;              // test2 parameters
  double v = 0.8;
  double delta = 0.01;
  // custom problem data
  std::string beta = "linear";       // linear | sqrt | linear_plus_sqrt
  std::string reaction = "zero";     // zero | half_sqrt
  std::vector<double> lambda{1.0};   // scalar or dim*dim row-major entries
  std::vector<double> velocity{0.0, 0.0, 0.0};
  std::string q;      // expressions over x1 x2 x3 t; empty = zero
  std::string u0;
  std::string g;      // empty: exact trace if available, else zero
  std::string exact;  // empty: no exact solution
  int dim = 3;
  std::vector<double> domain{0, 1, 0, 1, 0, 1};  // lo/hi per axis
};

struct MeshSourceConfig {
  std::string source = "generate";  // generate | file
  std::string file;
  std::array<int, 3> resolution{0, 0, 0};  // 0: problem-dependent default
  double refine_probability = -1.0;        // <0: problem-dependent default
  std::uint64_t seed = 1;
};

struct SolverSectionConfig {
  double newton_abs_tol = 1e-10;
  double newton_rel_tol = 0.0;
  int newton_max_iter = 50;
  int max_halvings = 8;
  bool condense = true;
  std::string switch_variables = "auto";  // auto | on | off
  double alpha = 0.0;                     // 0: sqrt(dim)
};

struct OutputConfig {
  std::string dir = "out";
  int snapshot_stride = 0;  // 0: final snapshot only
  bool vtk = true;
};

struct ConvergenceConfig {
  int levels = 3;
  std::vector<double> probabilities;   // per level; last value repeats
  std::vector<std::uint64_t> seeds;    // per level; defaults 1,2,3,...
};

struct RunConfig {
  ProblemConfig problem;
  MeshSourceConfig mesh;
  double T = 1.0;
  int N = 50;
  SolverSectionConfig solver;
  OutputConfig output;
  ConvergenceConfig convergence;

  /// Re-runnable echo of the full configuration with defaults materialized.
  std::string echo() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Instantiates the problem described by the configuration.
ProblemSpec make_problem(const ProblemConfig& pc);

/// Generates or loads the mesh described by the configuration; the effective
/// resolution defaults depend on the problem type.
Mesh make_mesh(const RunConfig& config);

/// Effective mesh generation parameters after problem-dependent defaults.
std::array<int, 3> effective_resolution(const RunConfig& config);
double effective_probability(const RunConfig& config);

/// Solver setup (Newton + alpha) from the configuration; the variable switch
/// 'auto' enables it exactly when beta is nonlinear.
SolverSetup make_solver_setup(const RunConfig& config);

}  // namespace hfv

#endif
