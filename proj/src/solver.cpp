#include "hfv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hfv {

double SolverDiagnostics::grad_l2_qt() const { return std::sqrt(grad_sq_qt); }

DiscreteField initialize(const Mesh& mesh, const ProblemSpec& spec) {
  DiscreteField u = DiscreteField::zero(mesh);
  for (int K = 0; K < mesh.n_cells(); ++K) u.cell[K] = spec.initial(mesh.cells[K].center);
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    if (!face.interior() && spec.boundary_kind(face.center) == ProblemSpec::BC::dirichlet) {
      u.face[f] = spec.dirichlet(face.center, 0.0);
    } else if (face.interior()) {
      u.face[f] = 0.5 * (u.cell[face.sides[0].cell] + u.cell[face.sides[1].cell]);
    } else {
      u.face[f] = u.cell[face.sides[0].cell];
    }
  }
  return u;
}

Scheme::Scheme(const Mesh& mesh, const ProblemSpec& spec, double alpha, bool switch_variables)
    : mesh_(mesh),
      spec_(spec),
      alpha_(alpha > 0.0 ? alpha : default_alpha(mesh.dim)),
      switch_(switch_variables) {
  // Region-resolved coefficients, region chosen by the owning cell.
  std::vector<int> region(mesh.n_cells());
  for (int K = 0; K < mesh.n_cells(); ++K)
    region[K] = spec.region_of ? spec.region_of(mesh.cells[K].center) : 0;
  TensorCoefficient lam = [&spec, region](int K, const Vec3& x) {
    return spec.diffusion(x, region[K]);
  };
  VectorCoefficient vel = [&spec, region](int K, const Vec3& x) {
    return spec.velocity(x, region[K]);
  };
  ops_ = assemble_cell_operators(mesh, lam, vel,
                                 std::vector<double>(mesh.n_cells(), alpha_));

  face_unknown_.assign(mesh.n_faces(), -1);
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    const bool dirichlet =
        !face.interior() && spec.boundary_kind(face.center) == ProblemSpec::BC::dirichlet;
    if (!dirichlet) {
      face_unknown_[f] = static_cast<int>(unknown_faces_.size());
      unknown_faces_.push_back(f);
    }
  }
}

double Scheme::u_of_c(double c) const { return switch_ ? spec_.beta.inverse.value(c) : c; }
double Scheme::du_of_c(double c) const { return switch_ ? spec_.beta.inverse.derivative(c) : 1.0; }
double Scheme::beta_of_c(double c) const { return switch_ ? c : spec_.beta.beta.value(c); }

double Scheme::dbeta_of_c(double c) const {
  if (switch_) return 1.0;
  const double d = spec_.beta.beta.derivative(c);
  if (!std::isfinite(d))
    throw std::runtime_error(
        "solver: beta'(u) is not finite at an iterate; enable the variable switch");
  return d;
}

double Scheme::reaction_dc(double c, double u) const {
  const double fp = spec_.reaction.F.derivative(u);
  const double up = du_of_c(c);
  if (std::isfinite(fp)) return fp * up;
  // F' blows up exactly where the inverse flattens; the composition stays
  // differentiable, so fall back to a centered difference of F(u(c)).
  const double h = 1e-7 * std::max(1.0, std::abs(c));
  return (spec_.reaction.F.value(u_of_c(c + h)) - spec_.reaction.F.value(u_of_c(c - h))) /
         (2.0 * h);
}

Eigen::VectorXd Scheme::pack(const DiscreteField& u) const {
  Eigen::VectorXd state(n_cell_unknowns() + n_face_unknowns());
  for (int K = 0; K < mesh_.n_cells(); ++K)
    state[K] = switch_ ? spec_.beta.beta.value(u.cell[K]) : u.cell[K];
  for (int j = 0; j < n_face_unknowns(); ++j)
    state[mesh_.n_cells() + j] = u.face[unknown_faces_[j]];
  return state;
}

void Scheme::face_values(const Eigen::VectorXd& state, double t, Eigen::VectorXd& uf) const {
  uf.resize(mesh_.n_faces());
  for (int f = 0; f < mesh_.n_faces(); ++f) {
    const int j = face_unknown_[f];
    uf[f] = j >= 0 ? state[mesh_.n_cells() + j]
                   : spec_.dirichlet(mesh_.faces[f].center, t);
  }
}

DiscreteField Scheme::unpack(const Eigen::VectorXd& state, double t) const {
  DiscreteField u = DiscreteField::zero(mesh_);
  for (int K = 0; K < mesh_.n_cells(); ++K) u.cell[K] = u_of_c(state[K]);
  face_values(state, t, u.face);
  return u;
}

Eigen::VectorXd Scheme::beta_cells(const Eigen::VectorXd& state) const {
  Eigen::VectorXd b(mesh_.n_cells());
  for (int K = 0; K < mesh_.n_cells(); ++K) b[K] = beta_of_c(state[K]);
  return b;
}

Eigen::VectorXd Scheme::residual(const Eigen::VectorXd& state, const Eigen::VectorXd& beta_prev,
                                 double t, double dt) const {
  const int nc = mesh_.n_cells();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(nc + n_face_unknowns());
  Eigen::VectorXd uf;
  face_values(state, t, uf);
  const double t_mid = t - 0.5 * dt;

  for (int K = 0; K < nc; ++K) {
    const auto& EK = mesh_.cell_faces(K);
    const CellOperator& op = ops_[K];
    const Cell& cell = mesh_.cells[K];
    const double u_K = u_of_c(state[K]);

    Eigen::VectorXd du(EK.size());
    for (std::size_t j = 0; j < EK.size(); ++j) du[j] = u_K - uf[EK[j]];
    const Eigen::VectorXd flux = op.A * du;

    double total_out = 0.0;
    for (std::size_t j = 0; j < EK.size(); ++j) {
      const double one_sided = flux[j] + op.V_plus[j] * u_K + op.V_minus[j] * uf[EK[j]];
      total_out += one_sided;
      const int fu = face_unknown_[EK[j]];
      if (fu >= 0) r[nc + fu] += one_sided;
    }

    const double q_K = spec_.source ? spec_.source(cell.center, t_mid) : 0.0;
    r[K] = cell.measure * (beta_of_c(state[K]) - beta_prev[K]) + dt * total_out +
           dt * cell.measure * spec_.reaction.F.value(u_K) - dt * cell.measure * q_K;
  }
  return r;
}

BlockSystem Scheme::linearize(const Eigen::VectorXd& state, const Eigen::VectorXd& beta_prev,
                              double t, double dt) const {
  const int nc = mesh_.n_cells();
  BlockSystem sys;
  sys.n_cell = nc;
  sys.n_face = n_face_unknowns();
  sys.cell_diag.resize(nc);
  sys.r_cell.resize(nc);
  sys.r_face = Eigen::VectorXd::Zero(sys.n_face);
  sys.coupling.resize(nc);

  Eigen::VectorXd uf;
  face_values(state, t, uf);
  const double t_mid = t - 0.5 * dt;

  // Face-face entries: one block per cell side, always emitted so the pattern
  // is state-independent.
  sys.face_face.reserve(static_cast<std::size_t>(nc) * 36);

  for (int K = 0; K < nc; ++K) {
    const auto& EK = mesh_.cell_faces(K);
    const int n = static_cast<int>(EK.size());
    const CellOperator& op = ops_[K];
    const Cell& cell = mesh_.cells[K];
    const double c_K = state[K];
    const double u_K = u_of_c(c_K);
    const double up = du_of_c(c_K);

    Eigen::VectorXd du(n);
    for (int j = 0; j < n; ++j) du[j] = u_K - uf[EK[j]];
    const Eigen::VectorXd flux = op.A * du;
    const Eigen::VectorXd rowsum = op.A.rowwise().sum();

    double total_out = 0.0;
    double v_plus_sum = 0.0;
    auto& couple = sys.coupling[K];
    couple.clear();
    couple.reserve(n);

    for (int j = 0; j < n; ++j) {
      const double one_sided = flux[j] + op.V_plus[j] * u_K + op.V_minus[j] * uf[EK[j]];
      total_out += one_sided;
      v_plus_sum += op.V_plus[j];

      const int fu_j = face_unknown_[EK[j]];
      if (fu_j >= 0) {
        sys.r_face[fu_j] += one_sided;
        CellCoupling cc;
        cc.col = fu_j;
        // cell row: d/du_sigma_j of dt * sum of one-sided fluxes
        cc.cell_row = dt * (-op.A.col(j).sum() + op.V_minus[j]);
        // face row j: d/dc_K of the one-sided flux
        cc.face_row = (rowsum[j] + op.V_plus[j]) * up;
        couple.push_back(cc);
        // face row j vs face unknowns of this cell
        for (int k = 0; k < n; ++k) {
          const int fu_k = face_unknown_[EK[k]];
          if (fu_k < 0) continue;
          double v = -op.A(j, k);
          if (k == j) v += op.V_minus[j];
          sys.face_face.emplace_back(fu_j, fu_k, v);
        }
      }
    }

    const double q_K = spec_.source ? spec_.source(cell.center, t_mid) : 0.0;
    sys.r_cell[K] = cell.measure * (beta_of_c(c_K) - beta_prev[K]) + dt * total_out +
                    dt * cell.measure * spec_.reaction.F.value(u_K) -
                    dt * cell.measure * q_K;
    sys.cell_diag[K] = cell.measure * dbeta_of_c(c_K) +
                       dt * (op.A_total + v_plus_sum) * up +
                       dt * cell.measure * reaction_dc(c_K, u_K);
  }
  return sys;
}

double Scheme::rhs_scale(const Eigen::VectorXd& beta_prev, double t, double dt) const {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_cell_unknowns() + n_face_unknowns());
  const double n = residual(zero, beta_prev, t, dt).lpNorm<Eigen::Infinity>();
  return std::max(1.0, n);
}

bool LinearCache::same_pattern(const Eigen::SparseMatrix<double>& A) const {
  if (!primed_ || frozen_.rows() != A.rows() || frozen_.cols() != A.cols() ||
      frozen_.nonZeros() != A.nonZeros())
    return false;
  const auto n = static_cast<std::size_t>(A.nonZeros());
  return std::equal(A.innerIndexPtr(), A.innerIndexPtr() + n, frozen_.innerIndexPtr()) &&
         std::equal(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1,
                    frozen_.outerIndexPtr());
}

Eigen::VectorXd LinearCache::solve(const Eigen::SparseMatrix<double>& A,
                                   const Eigen::VectorXd& b) {
  const double b_norm = b.norm();
  if (b_norm == 0.0) return Eigen::VectorXd::Zero(b.size());

  // The Krylov object holds a reference to `frozen_`; its value array is
  // updated in place so the reference stays valid and the preconditioner can
  // lag behind the matrix.
  const bool reuse = same_pattern(A);
  if (reuse) {
    std::copy(A.valuePtr(), A.valuePtr() + A.nonZeros(), frozen_.valuePtr());
  } else {
    frozen_ = A;
    frozen_.makeCompressed();
    krylov_.preconditioner().setDroptol(1e-6);
    krylov_.preconditioner().setFillfactor(30);
    krylov_.setTolerance(1e-13);
    krylov_.setMaxIterations(400);
    krylov_.compute(frozen_);
    ++preconditioner_builds;
    primed_ = true;
    analyzed_ = false;  // the direct path must re-analyze the new pattern
  }

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (krylov_.info() == Eigen::Success) {
      Eigen::VectorXd x = krylov_.solve(b);
      const bool good = x.allFinite() && (frozen_ * x - b).norm() <= 1e-12 * b_norm;
      if (good && (attempt > 0 || krylov_.iterations() <= 25)) {
        ++iterative_solves;
        return x;
      }
    }
    if (attempt == 0) {
      krylov_.compute(frozen_);  // rebuild the preconditioner at the current values
      ++preconditioner_builds;
    }
  }

  if (!analyzed_) {
    lu_.analyzePattern(frozen_);
    analyzed_ = true;
  }
  lu_.factorize(frozen_);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("linear solve: singular system");
  Eigen::VectorXd x = lu_.solve(b);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("linear solve: back-substitution failed");
  if ((frozen_ * x - b).norm() > 1e-12 * b_norm * 100)
    throw std::runtime_error("linear solve: direct factorization lost accuracy");
  ++direct_solves;
  return x;
}

NewtonOutcome newton_solve(const Scheme& scheme, Eigen::VectorXd& state,
                           const Eigen::VectorXd& beta_prev, double t, double dt,
                           const NewtonConfig& config, LinearCache& cache) {
  NewtonOutcome out;
  const double scale = scheme.rhs_scale(beta_prev, t, dt);
  out.rhs_scale = scale;
  const double tol = config.abs_tol * scale;

  Eigen::VectorXd r = scheme.residual(state, beta_prev, t, dt);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  const double r0 = rnorm;

  for (int it = 0; it < config.max_iter; ++it) {
    if (rnorm <= tol || (config.rel_tol > 0.0 && rnorm <= config.rel_tol * r0)) {
      out.converged = true;
      out.iterations = it;
      out.residual = rnorm / scale;
      return out;
    }

    const BlockSystem sys = scheme.linearize(state, beta_prev, t, dt);
    Eigen::VectorXd step(state.size());
    if (config.condense) {
      const CondensedSystem red = condense(sys);
      const Eigen::VectorXd dy = cache.solve(red.matrix, -red.residual);
      step.head(sys.n_cell) = recover_cell_update(sys, dy);
      step.tail(sys.n_face) = dy;
    } else {
      Eigen::SparseMatrix<double> J;
      Eigen::VectorXd rr;
      full_system(sys, J, rr);
      step = cache.solve(J, -rr);
    }

    // Residual-monotone damping: halve until the max-norm drops; if the
    // budget runs out take the best trial and keep iterating.
    double lambda = 1.0;
    double best_norm = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_state, best_r;
    for (int h = 0; h <= config.max_halvings; ++h) {
      Eigen::VectorXd trial = state + lambda * step;
      Eigen::VectorXd rt = scheme.residual(trial, beta_prev, t, dt);
      const double nt = rt.lpNorm<Eigen::Infinity>();
      if (nt < best_norm) {
        best_norm = nt;
        best_state = std::move(trial);
        best_r = std::move(rt);
      }
      if (nt < rnorm) break;
      lambda *= 0.5;
    }
    if (!std::isfinite(best_norm)) {
      out.iterations = it + 1;
      out.residual = rnorm / scale;
      out.message = "newton: residual became non-finite during the line search";
      return out;
    }
    state = std::move(best_state);
    r = std::move(best_r);
    rnorm = best_norm;
  }

  out.converged = rnorm <= tol;
  out.iterations = config.max_iter;
  out.residual = rnorm / scale;
  if (!out.converged) {
    std::ostringstream os;
    os << "newton: no convergence after " << config.max_iter
       << " iterations (scaled residual " << rnorm / scale << ")";
    out.message = os.str();
  }
  return out;
}

RunResult run(const Mesh& mesh, const ProblemSpec& spec, const TimeGrid& grid,
              const SolverSetup& setup) {
  RunResult result;
  result.grid = grid;
  if (!(grid.dt() > 0.0)) throw std::invalid_argument("run: non-positive time step");

  // Time-step restriction for non-monotone reactions.
  if (spec.reaction.lower > 0.0 && grid.dt() >= spec.beta.lower_slope / spec.reaction.lower) {
    std::ostringstream os;
    os << "time step " << grid.dt() << " violates dt < " << spec.beta.lower_slope << "/"
       << spec.reaction.lower << "; the discrete solution may not be unique";
    result.diagnostics.warnings.push_back(os.str());
  }

  Scheme scheme(mesh, spec, setup.alpha, setup.newton.switch_variables);
  LinearCache cache;

  DiscreteField u0 = initialize(mesh, spec);
  result.history.push_back(u0);
  Eigen::VectorXd state = scheme.pack(u0);
  Eigen::VectorXd beta_prev = scheme.beta_cells(state);

  auto record = [&](const DiscreteField& u, StepStats& st) {
    st.l2_u = cell_l2(mesh, u.cell);
    Eigen::VectorXd bu(mesh.n_cells());
    for (int K = 0; K < mesh.n_cells(); ++K) bu[K] = spec.beta.beta.value(u.cell[K]);
    st.l2_beta_u = cell_l2(mesh, bu);
    result.diagnostics.linf_l2_u = std::max(result.diagnostics.linf_l2_u, st.l2_u);
    result.diagnostics.linf_l2_beta = std::max(result.diagnostics.linf_l2_beta, st.l2_beta_u);
  };
  {
    StepStats st0;
    record(u0, st0);  // include the initial state in the sup-in-time norms
  }

  const double dt = grid.dt();
  for (int n = 1; n <= grid.N; ++n) {
    const double t = grid.t(n);
    const NewtonOutcome outcome =
        newton_solve(scheme, state, beta_prev, t, dt, setup.newton, cache);
    if (!outcome.converged) {
      result.failure = "step " + std::to_string(n) + ": " + outcome.message;
      return result;
    }

    DiscreteField u = scheme.unpack(state, t);
    StepStats st;
    st.newton_iters = outcome.iterations;
    st.residual = outcome.residual;
    st.rhs_scale = outcome.rhs_scale;
    // Conservation defect re-evaluated from the converged state: the face
    // rows are exactly the interface flux balances.
    {
      const Eigen::VectorXd r = scheme.residual(state, beta_prev, t, dt);
      st.flux_defect = scheme.n_face_unknowns() > 0
                           ? r.tail(scheme.n_face_unknowns()).lpNorm<Eigen::Infinity>()
                           : 0.0;
    }
    record(u, st);
    result.diagnostics.grad_sq_qt +=
        dt * std::pow(gradient_l2(mesh, u, scheme.alpha()), 2);
    result.diagnostics.steps.push_back(st);
    result.history.push_back(std::move(u));
    beta_prev = scheme.beta_cells(state);
    result.steps_done = n;
  }
  result.completed = true;
  return result;
}

}  // namespace hfv
