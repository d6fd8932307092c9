// Block view of one Newton linear system: every cell row couples only its own
// cell unknown and that cell's face unknowns, so the cell block is diagonal
// and can be eliminated cell by cell, leaving a face-only system.

#ifndef HFV_CONDENSATION_HPP
#define HFV_CONDENSATION_HPP

#include <Eigen/Sparse>

#include <vector>

namespace hfv {

struct CellCoupling {
  int col;                 // face unknown index
  double cell_row = 0.0;   // coefficient of this face unknown in the cell row
  double face_row = 0.0;   // coefficient of the cell unknown in this face row
};

struct BlockSystem {
  int n_cell = 0;
  int n_face = 0;
  Eigen::VectorXd cell_diag;                       // cell-row diagonal
  Eigen::VectorXd r_cell, r_face;                  // residual blocks
  std::vector<std::vector<CellCoupling>> coupling; // per cell
  std::vector<Eigen::Triplet<double>> face_face;   // face-row face couplings
};

struct CondensedSystem {
  Eigen::SparseMatrix<double> matrix;  // n_face x n_face
  Eigen::VectorXd residual;
};

/// Schur complement with respect to the diagonal cell block. Throws on a
/// zero cell pivot.
CondensedSystem condense(const BlockSystem& sys);

/// Cell updates implied by a face update dy when solving J [dc; dy] = -r.
Eigen::VectorXd recover_cell_update(const BlockSystem& sys, const Eigen::VectorXd& dy);

/// Uncondensed system over [cells; faces].
void full_system(const BlockSystem& sys, Eigen::SparseMatrix<double>& matrix,
                 Eigen::VectorXd& residual);

}  // namespace hfv

#endif
