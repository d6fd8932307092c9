#include "hfv/discretization.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace hfv {

DiscreteField DiscreteField::zero(const Mesh& mesh, bool constrained) {
  DiscreteField u;
  u.cell = Eigen::VectorXd::Zero(mesh.n_cells());
  u.face = Eigen::VectorXd::Zero(mesh.n_faces());
  u.boundary_constrained = constrained;
  return u;
}

DiscreteField project(const Mesh& mesh, const std::function<double(const Vec3&)>& f) {
  DiscreteField u = DiscreteField::zero(mesh);
  for (int K = 0; K < mesh.n_cells(); ++K) u.cell[K] = f(mesh.cells[K].center);
  for (int s = 0; s < mesh.n_faces(); ++s) u.face[s] = f(mesh.faces[s].center);
  return u;
}

void constrain_boundary(const Mesh& mesh, DiscreteField& u) {
  for (int s = 0; s < mesh.n_faces(); ++s)
    if (!mesh.faces[s].interior()) u.face[s] = 0.0;
  u.boundary_constrained = true;
}

double default_alpha(int dim) { return std::sqrt(static_cast<double>(dim)); }

Vec3 cell_gradient(const Mesh& mesh, const DiscreteField& u, int K) {
  const Cell& c = mesh.cells[K];
  Vec3 g = Vec3::Zero();
  for (int f : mesh.cell_faces(K)) {
    const Face& face = mesh.faces[f];
    g += face.measure * (u.face[f] - u.cell[K]) * mesh.face_side(f, K).normal;
  }
  return g / c.measure;
}

Vec3 stabilized_gradient(const Mesh& mesh, const DiscreteField& u, int K, int face,
                         double alpha) {
  if (alpha <= 0.0) alpha = default_alpha(mesh.dim);
  const Cell& c = mesh.cells[K];
  const Face& f = mesh.faces[face];
  const FaceSide& side = mesh.face_side(face, K);
  const Vec3 g = cell_gradient(mesh, u, K);
  const double r =
      alpha / side.dist * (u.face[face] - u.cell[K] - g.dot(f.center - c.center));
  return g + r * side.normal;
}

Eigen::MatrixXd cone_gradient_matrix(const Mesh& mesh, int K, int local_face, double alpha) {
  if (alpha <= 0.0) alpha = default_alpha(mesh.dim);
  const Cell& c = mesh.cells[K];
  const auto& EK = mesh.cell_faces(K);
  const int n = static_cast<int>(EK.size());

  Eigen::MatrixXd N(3, n);  // mean-gradient map
  for (int j = 0; j < n; ++j) {
    const Face& fj = mesh.faces[EK[j]];
    N.col(j) = fj.measure / c.measure * mesh.face_side(EK[j], K).normal;
  }
  const Face& f = mesh.faces[EK[local_face]];
  const FaceSide& side = mesh.face_side(EK[local_face], K);
  const Vec3 dx = f.center - c.center;

  Eigen::MatrixXd G = N;
  const double s = alpha / side.dist;
  Eigen::RowVectorXd row = -s * (dx.transpose() * N);
  row[local_face] += s;
  G += side.normal * row;
  return G;
}

std::vector<CellOperator> assemble_cell_operators(const Mesh& mesh,
                                                  const TensorCoefficient& tensor,
                                                  const VectorCoefficient& velocity,
                                                  const std::vector<double>& alpha_per_cell) {
  if (!alpha_per_cell.empty() && static_cast<int>(alpha_per_cell.size()) != mesh.n_cells())
    throw std::invalid_argument("assemble: alpha list must be empty or one value per cell");

  const int d = mesh.dim;
  std::vector<CellOperator> ops(mesh.n_cells());
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const Cell& c = mesh.cells[K];
    const auto& EK = mesh.cell_faces(K);
    const int n = static_cast<int>(EK.size());
    CellOperator& op = ops[K];
    op.alpha = alpha_per_cell.empty() ? default_alpha(d) : alpha_per_cell[K];

    op.A = Eigen::MatrixXd::Zero(n, n);
    op.V.resize(n);
    op.V_plus.resize(n);
    op.V_minus.resize(n);
    for (int j = 0; j < n; ++j) {
      const Face& f = mesh.faces[EK[j]];
      const FaceSide& side = mesh.face_side(EK[j], K);

      // Cone apex x_K, base barycenter x_sigma: centroid on the axis.
      const Vec3 cone_centroid =
          c.center + static_cast<double>(d) / (d + 1) * (f.center - c.center);
      Eigen::Matrix3d lam = tensor(K, cone_centroid);
      if ((lam - lam.transpose()).norm() > 1e-12 * std::max(1.0, lam.norm()))
        throw std::invalid_argument("assemble: diffusion tensor is not symmetric");
      {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(lam, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, lam.norm()))
          throw std::invalid_argument("assemble: diffusion tensor has a negative eigenvalue");
      }

      const Eigen::MatrixXd G = cone_gradient_matrix(mesh, K, j, op.alpha);
      op.A.noalias() += mesh.cone_measure(EK[j], K) * G.transpose() * lam * G;

      op.V[j] = f.measure * velocity(K, f.center).dot(side.normal);
      op.V_plus[j] = std::max(op.V[j], 0.0);
      op.V_minus[j] = std::min(op.V[j], 0.0);
    }
    // The construction is symmetric up to roundoff; symmetrize so downstream
    // consumers see it exactly.
    op.A = 0.5 * (op.A + op.A.transpose()).eval();
    op.A_total = op.A.sum();
  }
  return ops;
}

double diffusive_flux(const Mesh& mesh, const CellOperator& op, const DiscreteField& u, int K,
                      int local_face) {
  const auto& EK = mesh.cell_faces(K);
  double flux = 0.0;
  for (int j = 0; j < static_cast<int>(EK.size()); ++j)
    flux += op.A(local_face, j) * (u.cell[K] - u.face[EK[j]]);
  return flux;
}

double upwind_value(double u_cell, double u_face, double V_K_sigma) {
  return V_K_sigma >= 0.0 ? u_cell : u_face;
}

double bilinear_F(const Mesh& mesh, const std::vector<CellOperator>& ops, const DiscreteField& u,
                  const DiscreteField& v) {
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const auto& EK = mesh.cell_faces(K);
    const CellOperator& op = ops[K];
    Eigen::VectorXd du(EK.size());
    for (std::size_t j = 0; j < EK.size(); ++j) du[j] = u.cell[K] - u.face[EK[j]];
    const Eigen::VectorXd flux = op.A * du;
    for (std::size_t j = 0; j < EK.size(); ++j)
      acc += (v.cell[K] - v.face[EK[j]]) * flux[j];
  }
  return acc;
}

double bilinear_T(const Mesh& mesh, const std::vector<CellOperator>& ops, const DiscreteField& u,
                  const DiscreteField& v) {
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const auto& EK = mesh.cell_faces(K);
    const CellOperator& op = ops[K];
    for (std::size_t j = 0; j < EK.size(); ++j) {
      const double uw = upwind_value(u.cell[K], u.face[EK[j]], op.V[j]);
      acc += (v.cell[K] - v.face[EK[j]]) * op.V[j] * uw;
    }
  }
  return acc;
}

double diffusion_energy(const Mesh& mesh, const TensorCoefficient& tensor, const DiscreteField& u,
                        const DiscreteField& v, const std::vector<double>& alpha_per_cell) {
  const int d = mesh.dim;
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const Cell& c = mesh.cells[K];
    const double alpha =
        alpha_per_cell.empty() ? default_alpha(d) : alpha_per_cell[K];
    for (int f : mesh.cell_faces(K)) {
      const Face& face = mesh.faces[f];
      const Vec3 cone_centroid =
          c.center + static_cast<double>(d) / (d + 1) * (face.center - c.center);
      const Vec3 gu = stabilized_gradient(mesh, u, K, f, alpha);
      const Vec3 gv = stabilized_gradient(mesh, v, K, f, alpha);
      acc += mesh.cone_measure(f, K) * gv.dot(tensor(K, cone_centroid) * gu);
    }
  }
  return acc;
}

double seminorm_X(const Mesh& mesh, const DiscreteField& v) {
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K)
    for (int f : mesh.cell_faces(K)) {
      const double dv = v.face[f] - v.cell[K];
      acc += mesh.faces[f].measure / mesh.face_side(f, K).dist * dv * dv;
    }
  return std::sqrt(acc);
}

double norm_1pM(const Mesh& mesh, const Eigen::VectorXd& cell_values, double p) {
  if (p < 1.0) throw std::invalid_argument("norm_1pM: p must be >= 1");
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K)
    for (int f : mesh.cell_faces(K)) {
      const Face& face = mesh.faces[f];
      double diff;
      if (face.interior()) {
        const int other = face.sides[0].cell == K ? face.sides[1].cell : face.sides[0].cell;
        diff = std::abs(cell_values[K] - cell_values[other]);
      } else {
        diff = std::abs(cell_values[K]);
      }
      acc += face.measure * mesh.face_side(f, K).dist *
             std::pow(diff / face.dist_sum(), p);
    }
  return std::pow(acc, 1.0 / p);
}

double gradient_l2(const Mesh& mesh, const DiscreteField& u, double alpha) {
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K)
    for (int f : mesh.cell_faces(K))
      acc += mesh.cone_measure(f, K) * stabilized_gradient(mesh, u, K, f, alpha).squaredNorm();
  return std::sqrt(acc);
}

double cell_l2(const Mesh& mesh, const Eigen::VectorXd& cell_values) {
  double acc = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K)
    acc += mesh.cells[K].measure * cell_values[K] * cell_values[K];
  return std::sqrt(acc);
}

}  // namespace hfv
