#include "hfv/condensation.hpp"

#include <stdexcept>

namespace hfv {

CondensedSystem condense(const BlockSystem& sys) {
  CondensedSystem out;
  out.residual = sys.r_face;
  std::vector<Eigen::Triplet<double>> trips = sys.face_face;
  trips.reserve(trips.size() + 32 * sys.n_cell);
  for (int K = 0; K < sys.n_cell; ++K) {
    const double d = sys.cell_diag[K];
    if (d == 0.0) throw std::runtime_error("condense: zero cell pivot");
    // Entries are emitted even when numerically zero so the sparsity pattern
    // is state-independent and symbolic factorizations can be reused.
    for (const CellCoupling& row : sys.coupling[K]) {
      out.residual[row.col] -= row.face_row / d * sys.r_cell[K];
      for (const CellCoupling& col : sys.coupling[K])
        trips.emplace_back(row.col, col.col, -row.face_row * col.cell_row / d);
    }
  }
  out.matrix.resize(sys.n_face, sys.n_face);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXd recover_cell_update(const BlockSystem& sys, const Eigen::VectorXd& dy) {
  Eigen::VectorXd dc(sys.n_cell);
  for (int K = 0; K < sys.n_cell; ++K) {
    double acc = sys.r_cell[K];
    for (const CellCoupling& e : sys.coupling[K]) acc += e.cell_row * dy[e.col];
    dc[K] = -acc / sys.cell_diag[K];
  }
  return dc;
}

void full_system(const BlockSystem& sys, Eigen::SparseMatrix<double>& matrix,
                 Eigen::VectorXd& residual) {
  const int n = sys.n_cell + sys.n_face;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(sys.face_face.size() + 8 * sys.n_cell + sys.n_cell);
  for (int K = 0; K < sys.n_cell; ++K) {
    trips.emplace_back(K, K, sys.cell_diag[K]);
    for (const CellCoupling& e : sys.coupling[K]) {
      trips.emplace_back(K, sys.n_cell + e.col, e.cell_row);
      trips.emplace_back(sys.n_cell + e.col, K, e.face_row);
    }
  }
  for (const auto& t : sys.face_face)
    trips.emplace_back(sys.n_cell + t.row(), sys.n_cell + t.col(), t.value());
  matrix.resize(n, n);
  matrix.setFromTriplets(trips.begin(), trips.end());
  residual.resize(n);
  residual.head(sys.n_cell) = sys.r_cell;
  residual.tail(sys.n_face) = sys.r_face;
}

}  // namespace hfv
