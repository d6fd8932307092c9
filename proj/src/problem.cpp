#include "hfv/problem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hfv {

namespace {

double odd(double u, const std::function<double(double)>& f_nonneg) {
  return u < 0.0 ? -f_nonneg(-u) : f_nonneg(u);
}

// beta(u) = u + sqrt(u), odd-extended. Inverse via the quadratic in sqrt(u).
BetaBundle beta_linear_plus_sqrt() {
  BetaBundle b;
  b.beta.value = [](double u) { return odd(u, [](double a) { return a + std::sqrt(a); }); };
  b.beta.derivative = [](double u) {
    const double a = std::abs(u);
    return a == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 + 0.5 / std::sqrt(a);
  };
  b.inverse.value = [](double w) {
    return odd(w, [](double a) {
      const double s = 0.5 * (std::sqrt(1.0 + 4.0 * a) - 1.0);
      return s * s;
    });
  };
  b.inverse.derivative = [](double w) {
    const double a = std::abs(w);
    const double s = 0.5 * (std::sqrt(1.0 + 4.0 * a) - 1.0);
    return 2.0 * s / (1.0 + 2.0 * s);
  };
  b.lower_slope = 1.0;
  b.slope_range_lo = 0.0;
  b.slope_range_hi = 10.0;
  return b;
}

// beta(u) = sqrt(u), odd-extended; the inverse is the signed square.
BetaBundle beta_sqrt() {
  BetaBundle b;
  b.beta.value = [](double u) { return odd(u, [](double a) { return std::sqrt(a); }); };
  b.beta.derivative = [](double u) {
    const double a = std::abs(u);
    return a == 0.0 ? std::numeric_limits<double>::infinity() : 0.5 / std::sqrt(a);
  };
  b.inverse.value = [](double w) { return w < 0.0 ? -w * w : w * w; };
  b.inverse.derivative = [](double w) { return 2.0 * std::abs(w); };
  b.lower_slope = 0.5;  // valid on [0, 1] only; the global growth bound fails
  b.slope_range_lo = 0.0;
  b.slope_range_hi = 1.0;
  return b;
}

}  // namespace

bool ProblemSpec::inside_domain(const Vec3& x, double tol) const {
  for (int a = 0; a < dim; ++a) {
    const double pad = tol * std::max(1.0, std::abs(domain_hi[a] - domain_lo[a]));
    if (x[a] < domain_lo[a] - pad || x[a] > domain_hi[a] + pad) return false;
  }
  return true;
}

Coefficients eval_coefficients(const ProblemSpec& spec, const Vec3& x, double t) {
  if (!spec.inside_domain(x))
    throw std::invalid_argument("eval_coefficients: point outside the domain");
  Coefficients c;
  c.region = spec.region_of ? spec.region_of(x) : 0;
  c.lambda = spec.diffusion(x, c.region);
  c.velocity = spec.velocity(x, c.region);
  c.source = spec.source ? spec.source(x, t) : 0.0;
  return c;
}

ProblemSpec make_test1() {
  ProblemSpec spec;
  spec.name = "test1";
  spec.dim = 3;
  spec.domain_lo = Vec3(0, 0, 0);
  spec.domain_hi = Vec3(2, 1, 1);

  spec.beta = beta_linear_plus_sqrt();
  spec.reaction.F.value = [](double u) { return odd(u, [](double a) { return 0.5 * std::sqrt(a); }); };
  spec.reaction.F.derivative = [](double u) {
    const double a = std::abs(u);
    return a == 0.0 ? std::numeric_limits<double>::infinity() : 0.25 / std::sqrt(a);
  };
  spec.reaction.M = 1.0;
  spec.reaction.lipschitz = 0.25;
  spec.reaction.lower = 0.0;  // monotone: no time-step restriction

  spec.n_regions = 2;
  spec.region_of = [](const Vec3& x) { return x[0] <= 1.0 ? 0 : 1; };

  Eigen::Matrix3d lam_right;
  lam_right << 8, -5, -2,
              -5, 20, -7,
              -2, -7, 19;
  spec.diffusion = [lam_right](const Vec3&, int region) {
    return region == 0 ? Eigen::Matrix3d::Identity().eval() : lam_right;
  };
  // The tangential components in the right region are fixed by the exact
  // solution: the row sums of the tensor and the velocity components must
  // balance the time and reaction terms, which requires sum(V) = 20 there.
  // The normal component 4 is continuous across x1 = 1.
  spec.velocity = [](const Vec3&, int region) {
    return region == 0 ? Vec3(4, 0, 0) : Vec3(4, 8, 8);
  };
  {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(lam_right, Eigen::EigenvaluesOnly);
    spec.lambda_lo = std::min(1.0, es.eigenvalues().minCoeff());
    spec.lambda_hi = std::max(1.0, es.eigenvalues().maxCoeff());
  }

  spec.source = [](const Vec3&, double) { return 0.0; };
  auto exact = [](const Vec3& x, double t) { return std::exp(x[0] + x[1] + x[2] - t - 3.0); };
  spec.exact = exact;
  spec.initial = [exact](const Vec3& x) { return exact(x, 0.0); };
  spec.dirichlet = exact;
  spec.boundary_kind = [](const Vec3&) { return ProblemSpec::BC::dirichlet; };
  return spec;
}

ProblemSpec make_test2(double p, double v, double delta) {
  if (!(delta > 0.0) || !(v > 0.0))
    throw std::invalid_argument("make_test2: v and delta must be positive");
  ProblemSpec spec;
  spec.name = "test2";
  spec.dim = 3;
  spec.domain_lo = Vec3(0, 0, 0);
  spec.domain_hi = Vec3(1, 1, 1);

  spec.beta = beta_sqrt();
  spec.reaction.F.value = [](double) { return 0.0; };
  spec.reaction.F.derivative = [](double) { return 0.0; };
  spec.reaction.M = 1.0;
  spec.reaction.lower = 0.0;

  spec.n_regions = 1;
  spec.region_of = [](const Vec3&) { return 0; };
  spec.diffusion = [delta](const Vec3&, int) {
    return (delta * Eigen::Matrix3d::Identity()).eval();
  };
  spec.velocity = [v](const Vec3&, int) { return Vec3(v, 0, 0); };
  spec.lambda_lo = delta;
  spec.lambda_hi = delta;

  spec.source = [](const Vec3&, double) { return 0.0; };
  const double rate = v / (2.0 * delta);
  auto exact = [p, v, rate](const Vec3& x, double t) {
    const double s = x[0] - v * t - p;
    if (s > 0.0) return 0.0;  // ahead of the front (also avoids exp overflow)
    const double e = 1.0 - std::exp(rate * s);
    return e * e;
  };
  spec.exact = exact;
  spec.initial = [exact](const Vec3& x) { return exact(x, 0.0); };
  spec.dirichlet = exact;
  const Vec3 lo = spec.domain_lo, hi = spec.domain_hi;
  spec.boundary_kind = [lo, hi](const Vec3& x) {
    const double tol = 1e-9;
    if (std::abs(x[0] - lo[0]) < tol || std::abs(x[0] - hi[0]) < tol)
      return ProblemSpec::BC::dirichlet;
    return ProblemSpec::BC::zero_flux;
  };
  return spec;
}

HypothesesReport check_hypotheses(const ProblemSpec& spec, int n_samples) {
  HypothesesReport rep;
  auto warn = [&rep](const std::string& m) { rep.warnings.push_back(m); };
  auto note = [&rep](const std::string& m) { rep.notes.push_back(m); };

  const auto& beta = spec.beta;
  if (std::abs(beta.beta.value(0.0)) > 1e-14) warn("beta(0) != 0");
  if (std::abs(spec.reaction.F.value(0.0)) > 1e-14) warn("F(0) != 0");

  // Monotonicity and lower slope on the declared window.
  const double lo = beta.slope_range_lo, hi = beta.slope_range_hi;
  double min_slope = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int i = 0; i + 1 < n_samples; ++i) {
    const double a = lo + (hi - lo) * i / (n_samples - 1);
    const double b = lo + (hi - lo) * (i + 1) / (n_samples - 1);
    const double slope = (beta.beta.value(b) - beta.beta.value(a)) / (b - a);
    monotone = monotone && slope > 0.0;
    min_slope = std::min(min_slope, slope);
  }
  if (!monotone) warn("beta is not strictly increasing on the sampled grid");
  {
    std::ostringstream os;
    os << "min sampled beta slope on [" << lo << ", " << hi << "] = " << min_slope
       << " (declared " << beta.lower_slope << ")";
    note(os.str());
  }
  if (min_slope < beta.lower_slope * (1.0 - 1e-9))
    warn("declared beta growth constant not met on the declared window");
  // Probe beyond the declared window: the growth hypothesis is global in the
  // analysis but some catalog problems only satisfy it locally.
  {
    const double far_lo = hi, far_hi = 10.0 * std::max(hi, 1.0);
    double far_slope = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n_samples; ++i) {
      const double a = far_lo + (far_hi - far_lo) * i / (n_samples - 1);
      const double b = far_lo + (far_hi - far_lo) * (i + 1) / (n_samples - 1);
      far_slope = std::min(far_slope, (beta.beta.value(b) - beta.beta.value(a)) / (b - a));
    }
    if (far_slope < beta.lower_slope * (1.0 - 1e-9)) {
      std::ostringstream os;
      os << "global growth claim fails: slope drops to " << far_slope << " on [" << far_lo
         << ", " << far_hi << "] (declared " << beta.lower_slope
         << " holds only on the declared window)";
      warn(os.str());
    }
  }

  // Tensor symmetry and declared eigenvalue bounds at sampled points.
  const int grid = 5;
  double eig_lo = std::numeric_limits<double>::infinity(), eig_hi = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      for (int k = 0; k < (spec.dim == 3 ? grid : 1); ++k) {
        Vec3 x = spec.domain_lo;
        x[0] += (spec.domain_hi[0] - spec.domain_lo[0]) * (i + 0.5) / grid;
        x[1] += (spec.domain_hi[1] - spec.domain_lo[1]) * (j + 0.5) / grid;
        if (spec.dim == 3) x[2] += (spec.domain_hi[2] - spec.domain_lo[2]) * (k + 0.5) / grid;
        const int region = spec.region_of ? spec.region_of(x) : 0;
        const Eigen::Matrix3d lam = spec.diffusion(x, region);
        if ((lam - lam.transpose()).norm() > 1e-12 * std::max(1.0, lam.norm()))
          warn("diffusion tensor not symmetric at a sampled point");
        Eigen::Matrix3d lam_d = lam;
        if (spec.dim == 2) lam_d(2, 2) = 0.5 * (spec.lambda_lo + spec.lambda_hi);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(lam_d, Eigen::EigenvaluesOnly);
        eig_lo = std::min(eig_lo, es.eigenvalues().minCoeff());
        eig_hi = std::max(eig_hi, es.eigenvalues().maxCoeff());
      }
  if (eig_lo < spec.lambda_lo * (1.0 - 1e-9) || eig_hi > spec.lambda_hi * (1.0 + 1e-9))
    warn("tensor eigenvalues leave the declared bounds");
  if (!(eig_lo > 0.0)) warn("tensor has a non-positive eigenvalue at a sampled point");
  {
    std::ostringstream os;
    os << "sampled tensor eigenvalue range [" << eig_lo << ", " << eig_hi << "], declared ["
       << spec.lambda_lo << ", " << spec.lambda_hi << "]";
    note(os.str());
  }
  if (spec.reaction.lower == 0.0)
    note("reaction is monotone (or zero): no time-step restriction");
  return rep;
}

std::string HypothesesReport::summary() const {
  std::ostringstream os;
  for (const auto& n : notes) os << "note: " << n << "\n";
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  if (warnings.empty()) os << "all sampled hypotheses hold\n";
  return os.str();
}

}  // namespace hfv
