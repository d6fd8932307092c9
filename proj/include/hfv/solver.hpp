// Fully implicit time stepping of the hybrid scheme. Per step the nonlinear
// system in the switched unknowns (cell variable w = beta(u), face traces u)
// is solved by damped Newton iterations, optionally after static condensation
// of the cell unknowns.

#ifndef HFV_SOLVER_HPP
#define HFV_SOLVER_HPP

#include "hfv/condensation.hpp"
#include "hfv/discretization.hpp"
#include "hfv/mesh.hpp"
#include "hfv/problem.hpp"

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <memory>
#include <string>
#include <vector>

namespace hfv {

struct TimeGrid {
  double T = 1.0;
  int N = 1;

  double dt() const { return T / N; }
  double t(int n) const { return T * n / N; }
};

struct NewtonConfig {
  double abs_tol = 1e-10;  // on the rhs-scaled max-norm residual
  double rel_tol = 0.0;    // optional additional reduction criterion
  int max_iter = 50;
  int max_halvings = 8;
  bool condense = true;
  bool switch_variables = true;
};

struct StepStats {
  int newton_iters = 0;
  double residual = 0.0;     // scaled max-norm at acceptance
  double flux_defect = 0.0;  // worst interface conservation defect
  double rhs_scale = 1.0;    // scaling used by the stopping test
  double l2_u = 0.0;
  double l2_beta_u = 0.0;
};

struct SolverDiagnostics {
  std::vector<StepStats> steps;
  double linf_l2_u = 0.0;     // max over time of the L2 norm of u
  double linf_l2_beta = 0.0;  // same for beta(u)
  double grad_sq_qt = 0.0;    // time-integrated squared gradient norm
  std::vector<std::string> warnings;

  double grad_l2_qt() const;
};

struct RunResult {
  std::vector<DiscreteField> history;  // states 0..steps_done
  SolverDiagnostics diagnostics;
  TimeGrid grid;
  bool completed = false;
  int steps_done = 0;
  std::string failure;
};

/// Discrete initial state: centroid-rule cell averages; face values from
/// Dirichlet data at t = 0 where prescribed, adjacent cell average otherwise.
DiscreteField initialize(const Mesh& mesh, const ProblemSpec& spec);

/// One time step's algebraic system with the unknown layout
/// [cell variables; non-Dirichlet face values].
class Scheme {
 public:
  Scheme(const Mesh& mesh, const ProblemSpec& spec, double alpha = 0.0,
         bool switch_variables = true);

  const Mesh& mesh() const { return mesh_; }
  const std::vector<CellOperator>& operators() const { return ops_; }
  int n_cell_unknowns() const { return mesh_.n_cells(); }
  int n_face_unknowns() const { return static_cast<int>(unknown_faces_.size()); }
  int face_unknown(int face) const { return face_unknown_[face]; }
  bool switched() const { return switch_; }
  double alpha() const { return alpha_; }

  /// State vector from a field (cell variable transform + unknown faces).
  Eigen::VectorXd pack(const DiscreteField& u) const;
  /// Field from a state vector; Dirichlet faces take their data at time t.
  DiscreteField unpack(const Eigen::VectorXd& state, double t) const;
  /// Per-cell beta values of a state (the quantity advanced in time).
  Eigen::VectorXd beta_cells(const Eigen::VectorXd& state) const;

  /// Residual of the step equations at `state`, given the previous step's
  /// per-cell beta values. Layout: cell rows then face rows.
  Eigen::VectorXd residual(const Eigen::VectorXd& state, const Eigen::VectorXd& beta_prev,
                           double t, double dt) const;

  /// Residual plus Jacobian in block form.
  BlockSystem linearize(const Eigen::VectorXd& state, const Eigen::VectorXd& beta_prev,
                        double t, double dt) const;

  /// Magnitude of the state-independent part of the step equations, used to
  /// scale the stopping test.
  double rhs_scale(const Eigen::VectorXd& beta_prev, double t, double dt) const;

 private:
  struct FaceValues;
  void face_values(const Eigen::VectorXd& state, double t, Eigen::VectorXd& uf) const;
  double u_of_c(double c) const;
  double du_of_c(double c) const;
  double beta_of_c(double c) const;
  double dbeta_of_c(double c) const;
  double reaction_dc(double c, double u) const;

  const Mesh& mesh_;
  const ProblemSpec& spec_;
  std::vector<CellOperator> ops_;
  double alpha_;
  bool switch_;
  std::vector<int> face_unknown_;   // face -> unknown index or -1 (Dirichlet)
  std::vector<int> unknown_faces_;  // unknown index -> face
};

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;   // scaled max-norm
  double rhs_scale = 1.0;
  std::string message;
};

/// Sparse linear backend: incomplete-LU preconditioned BiCGSTAB with a
/// direct sparse LU fallback when the iteration misses the 1e-12 relative
/// residual contract. The sparsity pattern is state-independent across
/// Newton iterations and time steps, so the preconditioner is frozen and
/// only rebuilt when the Krylov iteration count degrades.
class LinearCache {
 public:
  Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b);

  int direct_solves = 0;
  int iterative_solves = 0;
  int preconditioner_builds = 0;

 private:
  bool same_pattern(const Eigen::SparseMatrix<double>& A) const;

  Eigen::SparseMatrix<double> frozen_;  // persistent storage; values updated in place
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> krylov_;
  bool primed_ = false;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
};

NewtonOutcome newton_solve(const Scheme& scheme, Eigen::VectorXd& state,
                           const Eigen::VectorXd& beta_prev, double t, double dt,
                           const NewtonConfig& config, LinearCache& cache);

struct SolverSetup {
  NewtonConfig newton;
  double alpha = 0.0;  // <= 0: sqrt(dim)
};

/// Full transient run. A step failure aborts with the partial history kept.
RunResult run(const Mesh& mesh, const ProblemSpec& spec, const TimeGrid& grid,
              const SolverSetup& setup);

}  // namespace hfv

#endif
