// Polyhedral mesh representation: cells, faces, incidence and the geometric
// quantities consumed by the hybrid scheme (measures, barycenters, normals,
// orthogonal distances).

#ifndef HFV_MESH_HPP
#define HFV_MESH_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hfv {

using Vec3 = Eigen::Vector3d;

/// A control volume. Generated cells additionally carry their axis-aligned
/// bounds (used by the refiner and the VTK writer); file-loaded cells may not.
struct Cell {
  Vec3 center = Vec3::Zero();   // x_K
  double measure = 0.0;         // m(K)
  double diameter = 0.0;        // h_K
  Vec3 box_lo = Vec3::Zero();
  Vec3 box_hi = Vec3::Zero();
  bool has_box = false;
};

/// One side of a face as seen from an incident cell.
struct FaceSide {
  int cell = -1;
  Vec3 normal = Vec3::Zero();   // n_{K,sigma}, outward unit
  double dist = 0.0;            // d_{K,sigma} > 0
};

struct Face {
  Vec3 center = Vec3::Zero();   // x_sigma (barycenter)
  double measure = 0.0;         // m(sigma), (d-1)-measure
  std::array<FaceSide, 2> sides{};
  int n_sides = 0;              // 1 = boundary, 2 = interior

  bool interior() const { return n_sides == 2; }
  // d_sigma of Definition 2.5: sum of the one or two orthogonal distances.
  double dist_sum() const {
    return n_sides == 2 ? sides[0].dist + sides[1].dist : sides[0].dist;
  }
};

struct MeshQuality {
  double h = 0.0;      // mesh size: max cell diameter
  double theta = 0.0;  // regularity ratio
};

/// Validation report: per-cell residuals of the geometric identities plus
/// any violated structural invariant.
struct MeshReport {
  MeshQuality quality;
  std::vector<double> identity_rel;    // per-cell grad-consistency identity
  std::vector<double> normal_sum_rel;  // per-cell |sum m(sigma) n| / sum m(sigma)
  double max_identity_rel = 0.0;
  double max_normal_sum_rel = 0.0;
  double max_cone_sum_rel = 0.0;       // |sum m d / dim - m(K)| / m(K)
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

class Mesh {
 public:
  int dim = 3;
  std::vector<Cell> cells;
  std::vector<Face> faces;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_interior_faces() const;
  int n_boundary_faces() const { return n_faces() - n_interior_faces(); }

  /// E_K: face indices of cell K (built once via finalize()).
  const std::vector<int>& cell_faces(int K) const { return cell_faces_[K]; }
  /// Side index (0 or 1) of cell K on face sigma.
  int side_of(int face, int K) const;
  const FaceSide& face_side(int face, int K) const {
    return faces[face].sides[side_of(face, K)];
  }

  /// Cone measure m(D_{K,sigma}) = m(sigma) d_{K,sigma} / dim.
  double cone_measure(int face, int K) const {
    const FaceSide& s = face_side(face, K);
    return faces[face].measure * s.dist / dim;
  }

  double total_measure() const;

  /// Rebuilds the cell->face adjacency from face incidence. Must be called
  /// after the face list is populated; throws on inconsistent incidence.
  void finalize();

  MeshQuality quality() const;

 private:
  std::vector<std::vector<int>> cell_faces_;
};

/// Conforming axis-aligned box mesh; 2D when resolution.z == 0 or lo.z==hi.z
/// with nz==1 and dim==2 is requested explicitly.
Mesh build_box_mesh(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& resolution,
                    int dim = 3);

/// Splits each selected cell into 2^dim children; interfaces against
/// unrefined neighbours become hanging sub-faces (|M_sigma| = 2 each).
/// Selection is an independent draw per cell; identical seeds reproduce the
/// mesh bit-exactly. Requires a conforming all-box mesh.
Mesh refine_random(const Mesh& mesh, double probability, std::uint64_t seed);

/// Recomputes the structural invariants and geometric identities; never
/// throws, violations are reported.
MeshReport validate(const Mesh& mesh);

}  // namespace hfv

#endif
