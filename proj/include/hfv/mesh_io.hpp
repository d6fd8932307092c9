// Plain-text mesh serialization and VTK legacy export.
//
// Text format ('#' starts a comment, tokens whitespace-separated):
//   header line:   dim n_cells n_faces
//   per cell:      x_K (dim floats)  m(K)  h_K
//   per face:      x_sigma (dim floats)  m(sigma)  cellA [cellB]
//                  n_A (dim floats)  d_A [d_B]
// Interior faces list both incident cells and both distances; n_B = -n_A.

#ifndef HFV_MESH_IO_HPP
#define HFV_MESH_IO_HPP

#include "hfv/mesh.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace hfv {

void write_mesh(const Mesh& mesh, std::ostream& os);
void write_mesh(const Mesh& mesh, const std::string& path);

Mesh read_mesh(std::istream& is);
Mesh read_mesh(const std::string& path);

/// Legacy VTK unstructured grid with named scalar cell fields. Cells with
/// box geometry are written as voxels/pixels; otherwise the mesh degrades to
/// one vertex per cell, which still carries the cell data.
void write_vtk(const Mesh& mesh, const std::string& path,
               const std::vector<std::pair<std::string, std::vector<double>>>& cell_fields);

}  // namespace hfv

#endif
