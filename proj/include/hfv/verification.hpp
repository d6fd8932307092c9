// Error metrics against exact solutions, convergence tables over mesh/time
// refinement sequences, front tracking and oscillation reporting.

#ifndef HFV_VERIFICATION_HPP
#define HFV_VERIFICATION_HPP

#include "hfv/solver.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hfv {

struct ErrorReport {
  std::vector<double> times;       // compared snapshots t_1..t_N
  std::vector<double> exact_norm;  // centroid-rule L2 norm of the exact field
  std::vector<double> abs_err;
  std::vector<double> rel_err;
  double Err = 0.0;                // max over time of the relative error
  bool absolute_fallback = false;  // a zero exact norm forced absolute errors
};

/// Max-over-time relative L2 error, cell-centroid quadrature in both norms.
ErrorReport error_metric(const RunResult& result, const ProblemSpec& spec, const Mesh& mesh);

struct LevelSpec {
  std::array<int, 3> resolution{1, 1, 1};
  double refine_probability = 0.0;
  std::uint64_t seed = 0;
  int N = 1;
};

struct ConvergenceRow {
  int N = 0;
  double h = 0.0;
  int elements = 0;
  int faces = 0;
  double Err = 0.0;
  double order = 0.0;  // fitted against the previous row; NaN on the first
  double runtime_s = 0.0;
  bool failed = false;
  std::string failure;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Header "N,h,elements,faces,Err,order,runtime_s".
  std::string csv() const;
  /// gnuplot-ready "h Err" pairs of the completed rows.
  std::string err_vs_h() const;
};

/// Runs the problem on each level (generated from the problem's domain box)
/// and tabulates errors with fitted orders. A failing level is recorded and
/// the remaining levels still run.
ConvergenceTable convergence_study(const ProblemSpec& spec, const std::vector<LevelSpec>& levels,
                                   double T, const SolverSetup& setup);

/// Largest cell-centroid x1 with a cell value above the threshold. Throws if
/// the field is entirely below it.
double front_position(const Mesh& mesh, const DiscreteField& u, double threshold = 1e-3);

struct OscillationReport {
  double min_u = 0.0;
  double max_u = 0.0;
  double undershoot = 0.0;  // below the exact range
  double overshoot = 0.0;   // above it
};

/// Extremes over all cells and recorded times against the exact range
/// [range_lo, range_hi].
OscillationReport oscillation_report(const std::vector<DiscreteField>& history, double range_lo,
                                     double range_hi);

}  // namespace hfv

#endif
