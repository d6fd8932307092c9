#include "hfv/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hfv {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One record per line; '#' starts a comment, blank lines are skipped.
std::vector<std::vector<std::string>> read_records(std::istream& is) {
  std::vector<std::vector<std::string>> records;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (!tokens.empty()) records.push_back(std::move(tokens));
  }
  return records;
}

double parse_number(const std::string& t, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != t.size())
    throw std::runtime_error(std::string("mesh file: bad ") + what + " '" + t + "'");
  return v;
}

int parse_int(const std::string& t, const char* what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != t.size())
    throw std::runtime_error(std::string("mesh file: bad ") + what + " '" + t + "'");
  return static_cast<int>(v);
}

}  // namespace

void write_mesh(const Mesh& mesh, std::ostream& os) {
  const int d = mesh.dim;
  os << "# polyhedral mesh: geometric quantities only\n";
  os << d << " " << mesh.n_cells() << " " << mesh.n_faces() << "\n";
  os << "# cells: center(" << d << ") measure diameter\n";
  for (const Cell& c : mesh.cells) {
    for (int a = 0; a < d; ++a) os << fmt(c.center[a]) << " ";
    os << fmt(c.measure) << " " << fmt(c.diameter) << "\n";
  }
  os << "# faces: center(" << d << ") measure cellA [cellB] normalA(" << d << ") dA [dB]\n";
  for (const Face& f : mesh.faces) {
    for (int a = 0; a < d; ++a) os << fmt(f.center[a]) << " ";
    os << fmt(f.measure) << " " << f.sides[0].cell;
    if (f.n_sides == 2) os << " " << f.sides[1].cell;
    for (int a = 0; a < d; ++a) os << " " << fmt(f.sides[0].normal[a]);
    os << " " << fmt(f.sides[0].dist);
    if (f.n_sides == 2) os << " " << fmt(f.sides[1].dist);
    os << "\n";
  }
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("mesh file: cannot open for writing: " + path);
  write_mesh(mesh, os);
  if (!os.good()) throw std::runtime_error("mesh file: write failed: " + path);
}

Mesh read_mesh(std::istream& is) {
  const auto records = read_records(is);
  if (records.empty()) throw std::runtime_error("mesh file: empty");
  std::size_t r = 0;

  const auto& header = records[r++];
  if (header.size() != 3) throw std::runtime_error("mesh file: header must be 'dim n_cells n_faces'");
  Mesh mesh;
  mesh.dim = parse_int(header[0], "dim");
  if (mesh.dim != 2 && mesh.dim != 3) throw std::runtime_error("mesh file: dim must be 2 or 3");
  const int d = mesh.dim;
  const int nc = parse_int(header[1], "cell count");
  const int nf = parse_int(header[2], "face count");
  if (nc < 1 || nf < 1) throw std::runtime_error("mesh file: empty mesh");
  if (records.size() - r != static_cast<std::size_t>(nc + nf))
    throw std::runtime_error("mesh file: record count does not match header");

  mesh.cells.resize(nc);
  for (Cell& c : mesh.cells) {
    const auto& rec = records[r++];
    if (rec.size() != static_cast<std::size_t>(d + 2))
      throw std::runtime_error("mesh file: bad cell record");
    for (int a = 0; a < d; ++a) c.center[a] = parse_number(rec[a], "cell center");
    c.measure = parse_number(rec[d], "cell measure");
    c.diameter = parse_number(rec[d + 1], "cell diameter");
    if (!(c.measure > 0.0) || !(c.diameter > 0.0))
      throw std::runtime_error("mesh file: non-positive cell measure or diameter");
  }

  // Interior face records carry two extra tokens (cellB, dB); the per-line
  // token count disambiguates the layouts.
  const std::size_t n_boundary_tok = 2 * d + 3;
  const std::size_t n_interior_tok = 2 * d + 5;
  mesh.faces.resize(nf);
  for (Face& f : mesh.faces) {
    const auto& rec = records[r++];
    bool interior;
    if (rec.size() == n_boundary_tok)
      interior = false;
    else if (rec.size() == n_interior_tok)
      interior = true;
    else
      throw std::runtime_error("mesh file: bad face record length");

    std::size_t p = 0;
    for (int a = 0; a < d; ++a) f.center[a] = parse_number(rec[p++], "face center");
    f.measure = parse_number(rec[p++], "face measure");
    if (!(f.measure > 0.0)) throw std::runtime_error("mesh file: non-positive face measure");
    f.n_sides = interior ? 2 : 1;
    f.sides[0].cell = parse_int(rec[p++], "face cellA");
    if (interior) f.sides[1].cell = parse_int(rec[p++], "face cellB");
    for (int a = 0; a < d; ++a) f.sides[0].normal[a] = parse_number(rec[p++], "face normal");
    f.sides[0].dist = parse_number(rec[p++], "face dA");
    if (interior) {
      f.sides[1].normal = -f.sides[0].normal;
      f.sides[1].dist = parse_number(rec[p++], "face dB");
    }
    for (int s = 0; s < f.n_sides; ++s)
      if (!(f.sides[s].dist > 0.0))
        throw std::runtime_error("mesh file: non-positive face distance");
  }

  mesh.finalize();  // throws on inconsistent incidence
  return mesh;
}

Mesh read_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("mesh file: cannot open: " + path);
  return read_mesh(is);
}

void write_vtk(const Mesh& mesh, const std::string& path,
               const std::vector<std::pair<std::string, std::vector<double>>>& cell_fields) {
  for (const auto& [name, values] : cell_fields)
    if (static_cast<int>(values.size()) != mesh.n_cells())
      throw std::invalid_argument("vtk: field '" + name + "' has wrong size");

  std::ofstream os(path);
  if (!os) throw std::runtime_error("vtk: cannot open for writing: " + path);

  bool all_boxes = true;
  for (const Cell& c : mesh.cells) all_boxes = all_boxes && c.has_box;

  os << "# vtk DataFile Version 3.0\ncell fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  const int nc = mesh.n_cells();
  if (all_boxes) {
    const int d = mesh.dim;
    const int ppc = 1 << d;  // voxel / pixel corners
    os << "POINTS " << nc * ppc << " double\n";
    for (const Cell& c : mesh.cells) {
      for (int corner = 0; corner < ppc; ++corner) {
        Vec3 p = Vec3::Zero();
        for (int a = 0; a < d; ++a) p[a] = ((corner >> a) & 1) ? c.box_hi[a] : c.box_lo[a];
        os << fmt(p[0]) << " " << fmt(p[1]) << " " << fmt(p[2]) << "\n";
      }
    }
    os << "CELLS " << nc << " " << nc * (ppc + 1) << "\n";
    for (int K = 0; K < nc; ++K) {
      os << ppc;
      for (int corner = 0; corner < ppc; ++corner) os << " " << K * ppc + corner;
      os << "\n";
    }
    os << "CELL_TYPES " << nc << "\n";
    const int vtk_type = d == 3 ? 11 : 8;  // VTK_VOXEL / VTK_PIXEL
    for (int K = 0; K < nc; ++K) os << vtk_type << "\n";
  } else {
    // No shape information: fall back to one vertex per cell.
    os << "POINTS " << nc << " double\n";
    for (const Cell& c : mesh.cells)
      os << fmt(c.center[0]) << " " << fmt(c.center[1]) << " " << fmt(c.center[2]) << "\n";
    os << "CELLS " << nc << " " << 2 * nc << "\n";
    for (int K = 0; K < nc; ++K) os << "1 " << K << "\n";
    os << "CELL_TYPES " << nc << "\n";
    for (int K = 0; K < nc; ++K) os << "1\n";  // VTK_VERTEX
  }

  if (!cell_fields.empty()) {
    os << "CELL_DATA " << nc << "\n";
    for (const auto& [name, values] : cell_fields) {
      os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : values) os << fmt(v) << "\n";
    }
  }
  if (!os.good()) throw std::runtime_error("vtk: write failed: " + path);
}

}  // namespace hfv
