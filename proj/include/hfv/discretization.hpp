// Discrete unknowns (one value per cell plus one per face), the stabilized
// cell/cone gradients, the local flux matrices they induce, upwind convective
// fluxes, the bilinear forms of the scheme and the discrete norms.

#ifndef HFV_DISCRETIZATION_HPP
#define HFV_DISCRETIZATION_HPP

#include "hfv/mesh.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace hfv {

/// Element of the discrete space: cell values plus face values. Fields with
/// boundary_constrained = true belong to the zero-trace subspace (all
/// boundary face values vanish).
struct DiscreteField {
  Eigen::VectorXd cell;
  Eigen::VectorXd face;
  bool boundary_constrained = false;

  static DiscreteField zero(const Mesh& mesh, bool constrained = false);
};

/// Pointwise projection: cell value at x_K, face value at x_sigma.
DiscreteField project(const Mesh& mesh, const std::function<double(const Vec3&)>& f);

/// Enforces zero boundary faces (membership in the zero-trace space).
void constrain_boundary(const Mesh& mesh, DiscreteField& u);

/// Default stabilization parameter sqrt(dim); reproduces the two-point flux
/// on orthogonal meshes with scalar diffusion.
double default_alpha(int dim);

/// Mean cell gradient: (1/m(K)) sum m(sigma)(u_sigma - u_K) n_{K,sigma}.
Vec3 cell_gradient(const Mesh& mesh, const DiscreteField& u, int K);

/// Cone gradient: cell gradient plus the stabilization correction along the
/// face normal.
Vec3 stabilized_gradient(const Mesh& mesh, const DiscreteField& u, int K, int face,
                         double alpha);

/// d x |E_K| matrix mapping local face increments (u_sigma' - u_K) to the
/// cone gradient on D_{K,face}.
Eigen::MatrixXd cone_gradient_matrix(const Mesh& mesh, int K, int local_face, double alpha);

/// Per-cell operator: symmetric local flux matrix over E_K x E_K and the
/// convective face integrals with their sign splits.
struct CellOperator {
  Eigen::MatrixXd A;       // A_K, |E_K| x |E_K|
  Eigen::VectorXd V;       // V_{K,sigma} = m(sigma) V.n_{K,sigma}
  Eigen::VectorXd V_plus;  // max(V, 0)
  Eigen::VectorXd V_minus; // min(V, 0)
  double alpha = 0.0;
  double A_total = 0.0;    // sum of all entries of A (cell-row flux coefficient)
};

using TensorCoefficient = std::function<Eigen::Matrix3d(int cell, const Vec3&)>;
using VectorCoefficient = std::function<Vec3(int cell, const Vec3&)>;

/// Assembles every cell's flux matrix from the cone gradients (one-point
/// tensor rule at the cone centroid) and the convective integrals from the
/// face-barycenter rule. alpha_per_cell may be empty (default alpha) or hold
/// one value per cell. Throws on non-symmetric tensors or negative
/// eigenvalues.
std::vector<CellOperator> assemble_cell_operators(const Mesh& mesh,
                                                  const TensorCoefficient& tensor,
                                                  const VectorCoefficient& velocity,
                                                  const std::vector<double>& alpha_per_cell = {});

/// Diffusive flux through local face index `local` of cell K:
/// sum_sigma' A_K^{sigma sigma'} (u_K - u_sigma').
double diffusive_flux(const Mesh& mesh, const CellOperator& op, const DiscreteField& u, int K,
                      int local_face);

/// Upwind trace (cell value when the flow leaves the cell, face value
/// otherwise; ties count as outflow).
double upwind_value(double u_cell, double u_face, double V_K_sigma);

/// Diffusion form <v,u>_F = sum_K sum_sigma (v_K - v_sigma) F_{K,sigma}(u).
double bilinear_F(const Mesh& mesh, const std::vector<CellOperator>& ops, const DiscreteField& u,
                  const DiscreteField& v);

/// Convection form <v,u>_T with upwind traces.
double bilinear_T(const Mesh& mesh, const std::vector<CellOperator>& ops, const DiscreteField& u,
                  const DiscreteField& v);

/// Cone-quadrature evaluation of the diffusion form (the gradient-side route,
/// equal to bilinear_F up to roundoff).
double diffusion_energy(const Mesh& mesh, const TensorCoefficient& tensor, const DiscreteField& u,
                        const DiscreteField& v, const std::vector<double>& alpha_per_cell = {});

/// |v|_X^2 = sum_K sum_sigma m(sigma)/d_{K,sigma} (v_sigma - v_K)^2.
double seminorm_X(const Mesh& mesh, const DiscreteField& v);

/// Discrete W^{1,p} norm over cell values (Definition 2.5 differences).
double norm_1pM(const Mesh& mesh, const Eigen::VectorXd& cell_values, double p);

/// L2 norm of the piecewise-constant cone gradient.
double gradient_l2(const Mesh& mesh, const DiscreteField& u, double alpha = 0.0);

/// L2 norm of a cellwise field by centroid quadrature.
double cell_l2(const Mesh& mesh, const Eigen::VectorXd& cell_values);

}  // namespace hfv

#endif
