// Problem data: the time nonlinearity with its inverse (for the Newton
// variable switch), reaction, region-wise diffusion tensor and velocity,
// source, initial and boundary data, optional exact solution, and the
// built-in catalog of the two verification tests.

#ifndef HFV_PROBLEM_HPP
#define HFV_PROBLEM_HPP

#include "hfv/mesh.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace hfv {

struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;  // may be infinite at isolated points
};

/// Monotone time nonlinearity together with its inverse. The inverse's
/// derivative must be finite everywhere; that is what makes the cell-variable
/// switch well posed where the forward derivative blows up.
struct BetaBundle {
  ScalarFunction beta;
  ScalarFunction inverse;      // phi = beta^{-1}
  double lower_slope = 1.0;    // declared growth constant
  double slope_range_lo = 0.0; // window on which lower_slope is claimed
  double slope_range_hi = 1.0;
  bool linear = false;         // beta(u) = u
};

struct ReactionBundle {
  ScalarFunction F;       // F(0) = 0
  double M = 1.0;         // positivity threshold
  double lipschitz = 0.0; // Lipschitz constant outside [0, M]
  double lower = 0.0;     // decrease bound; 0 means monotone, no dt restriction
};

struct ProblemSpec {
  enum class BC { dirichlet, zero_flux };

  std::string name;
  int dim = 3;
  Vec3 domain_lo = Vec3::Zero();
  Vec3 domain_hi = Vec3::Ones();

  BetaBundle beta;
  ReactionBundle reaction;

  int n_regions = 1;
  std::function<int(const Vec3&)> region_of;
  std::function<Eigen::Matrix3d(const Vec3&, int)> diffusion;
  std::function<Vec3(const Vec3&, int)> velocity;
  std::function<double(const Vec3&, double)> source;  // q(x, t)
  std::function<double(const Vec3&)> initial;
  std::function<double(const Vec3&, double)> dirichlet;
  std::function<double(const Vec3&, double)> exact;   // may be empty
  std::function<BC(const Vec3&)> boundary_kind;       // by face barycenter

  double lambda_lo = 1.0;  // declared eigenvalue bounds of the tensor
  double lambda_hi = 1.0;

  bool has_exact() const { return static_cast<bool>(exact); }
  bool inside_domain(const Vec3& x, double tol = 1e-12) const;
};

struct Coefficients {
  Eigen::Matrix3d lambda;
  Vec3 velocity;
  double source;
  int region;
};

/// Region-resolved coefficient lookup; throws if x lies outside the closed
/// domain.
Coefficients eval_coefficients(const ProblemSpec& spec, const Vec3& x, double t);

/// Heterogeneous anisotropic test: two regions split at x1 = 1 on
/// (0,2)x(0,1)x(0,1), exponential exact solution, Dirichlet everywhere.
ProblemSpec make_test1();

/// Traveling-wave test on the unit cube: square-root time nonlinearity (odd
/// extended), isotropic diffusion delta, uniform velocity along x1. Dirichlet
/// on the x1 = 0 and x1 = 1 sides from the exact solution, zero-flux
/// elsewhere.
ProblemSpec make_test2(double p = 0.2, double v = 0.8, double delta = 0.01);

struct HypothesesReport {
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  bool ok() const { return warnings.empty(); }
  std::string summary() const;
};

/// Samples the structural hypotheses (monotone beta with the declared slope,
/// reaction vanishing at zero, tensor symmetry and eigenvalue bounds).
/// Violations are warnings: some catalog problems satisfy the slope bound
/// only on their working range.
HypothesesReport check_hypotheses(const ProblemSpec& spec, int n_samples = 257);

}  // namespace hfv

#endif
