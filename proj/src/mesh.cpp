#include "hfv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hfv {

int Mesh::n_interior_faces() const {
  int n = 0;
  for (const Face& f : faces) n += f.interior() ? 1 : 0;
  return n;
}

int Mesh::side_of(int face, int K) const {
  const Face& f = faces[face];
  if (f.sides[0].cell == K) return 0;
  if (f.n_sides == 2 && f.sides[1].cell == K) return 1;
  throw std::logic_error("mesh: cell " + std::to_string(K) + " not incident to face " +
                         std::to_string(face));
}

double Mesh::total_measure() const {
  double m = 0.0;
  for (const Cell& c : cells) m += c.measure;
  return m;
}

void Mesh::finalize() {
  cell_faces_.assign(cells.size(), {});
  for (int f = 0; f < n_faces(); ++f) {
    const Face& face = faces[f];
    if (face.n_sides < 1 || face.n_sides > 2)
      throw std::runtime_error("mesh: face " + std::to_string(f) + " has invalid side count");
    for (int s = 0; s < face.n_sides; ++s) {
      const int K = face.sides[s].cell;
      if (K < 0 || K >= n_cells())
        throw std::runtime_error("mesh: face " + std::to_string(f) +
                                 " references missing cell " + std::to_string(K));
      cell_faces_[K].push_back(f);
    }
  }
  for (int K = 0; K < n_cells(); ++K)
    if (cell_faces_[K].empty())
      throw std::runtime_error("mesh: cell " + std::to_string(K) + " has no faces");
}

MeshQuality Mesh::quality() const {
  MeshQuality q;
  for (const Cell& c : cells) q.h = std::max(q.h, c.diameter);
  for (int f = 0; f < n_faces(); ++f) {
    const Face& face = faces[f];
    if (face.n_sides == 2) {
      const double r = face.sides[0].dist / face.sides[1].dist;
      q.theta = std::max({q.theta, r, 1.0 / r});
    }
    for (int s = 0; s < face.n_sides; ++s)
      q.theta = std::max(q.theta, cells[face.sides[s].cell].diameter / face.sides[s].dist);
  }
  return q;
}

namespace {

struct Box {
  Vec3 lo, hi;
};

// One cell side: the (dim-1)-box it spans within its plane, plus orientation.
struct SideRect {
  int cell;
  double lo[2], hi[2];  // extents along the two in-plane axes (1 axis in 2D)
  bool positive;        // outward normal along +axis
};

double rect_area(const SideRect& r, int n_inplane) {
  double a = 1.0;
  for (int i = 0; i < n_inplane; ++i) a *= r.hi[i] - r.lo[i];
  return a;
}

// Face builder for collections of axis-aligned boxes. Faces are the pairwise
// overlaps of opposing cell sides within each plane; the uncovered remainder
// of a side must be a full side on the domain boundary.
Mesh build_from_boxes(int dim, const std::vector<Box>& boxes) {
  Mesh mesh;
  mesh.dim = dim;
  mesh.cells.resize(boxes.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box& b = boxes[i];
    Cell& c = mesh.cells[i];
    c.box_lo = b.lo;
    c.box_hi = b.hi;
    c.has_box = true;
    c.center = 0.5 * (b.lo + b.hi);
    const Vec3 ext = b.hi - b.lo;
    double m = 1.0, d2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      if (!(ext[a] > 0.0)) throw std::invalid_argument("mesh: degenerate box cell");
      m *= ext[a];
      d2 += ext[a] * ext[a];
      scale = std::max(scale, std::abs(b.lo[a]));
      scale = std::max(scale, std::abs(b.hi[a]));
    }
    c.measure = m;
    c.diameter = std::sqrt(d2);
  }

  const double tol = 1e-12 * std::max(scale, 1.0);
  const int n_inplane = dim - 1;

  for (int axis = 0; axis < dim; ++axis) {
    int ip[2] = {0, 0};
    {
      int k = 0;
      for (int a = 0; a < dim; ++a)
        if (a != axis) ip[k++] = a;
    }
    // Bucket sides by plane coordinate (tolerance-merged, ascending).
    std::map<double, std::vector<SideRect>> planes;
    auto bucket = [&](double coord) -> std::vector<SideRect>& {
      auto it = planes.lower_bound(coord - tol);
      if (it != planes.end() && std::abs(it->first - coord) <= tol) return it->second;
      return planes[coord];
    };
    for (int K = 0; K < mesh.n_cells(); ++K) {
      const Box& b = boxes[K];
      for (int o = 0; o < 2; ++o) {
        SideRect r;
        r.cell = K;
        r.positive = (o == 1);
        for (int i = 0; i < n_inplane; ++i) {
          r.lo[i] = b.lo[ip[i]];
          r.hi[i] = b.hi[ip[i]];
        }
        bucket(o == 0 ? b.lo[axis] : b.hi[axis]).push_back(r);
      }
    }

    for (auto& [coord, sides] : planes) {
      std::vector<double> matched(sides.size(), 0.0);
      // Opposing pairs: outward +axis side of the lower cell against outward
      // -axis side of the upper cell.
      for (std::size_t a = 0; a < sides.size(); ++a) {
        if (!sides[a].positive) continue;
        for (std::size_t b = 0; b < sides.size(); ++b) {
          if (sides[b].positive) continue;
          double lo[2], hi[2], area = 1.0;
          bool overlap = true;
          for (int i = 0; i < n_inplane; ++i) {
            lo[i] = std::max(sides[a].lo[i], sides[b].lo[i]);
            hi[i] = std::min(sides[a].hi[i], sides[b].hi[i]);
            if (hi[i] - lo[i] <= tol) {
              overlap = false;
              break;
            }
            area *= hi[i] - lo[i];
          }
          if (!overlap) continue;

          Face f;
          f.measure = area;
          f.center[axis] = coord;
          for (int i = 0; i < n_inplane; ++i) f.center[ip[i]] = 0.5 * (lo[i] + hi[i]);
          f.n_sides = 2;
          f.sides[0].cell = sides[a].cell;
          f.sides[0].normal = Vec3::Zero();
          f.sides[0].normal[axis] = 1.0;
          f.sides[0].dist = coord - mesh.cells[sides[a].cell].center[axis];
          f.sides[1].cell = sides[b].cell;
          f.sides[1].normal = Vec3::Zero();
          f.sides[1].normal[axis] = -1.0;
          f.sides[1].dist = mesh.cells[sides[b].cell].center[axis] - coord;
          mesh.faces.push_back(f);
          matched[a] += area;
          matched[b] += area;
        }
      }
      // Unmatched sides become boundary faces; partially covered sides mean
      // the box collection is not one of the supported configurations.
      for (std::size_t a = 0; a < sides.size(); ++a) {
        const double area = rect_area(sides[a], n_inplane);
        if (matched[a] > tol * std::max(area, 1.0) &&
            matched[a] < area - tol * std::max(area, 1.0))
          throw std::runtime_error("mesh: partially covered cell side (unsupported box layout)");
        if (matched[a] > 0.5 * area) continue;
        Face f;
        f.measure = area;
        f.center[axis] = coord;
        for (int i = 0; i < n_inplane; ++i) f.center[ip[i]] = 0.5 * (sides[a].lo[i] + sides[a].hi[i]);
        f.n_sides = 1;
        f.sides[0].cell = sides[a].cell;
        f.sides[0].normal = Vec3::Zero();
        f.sides[0].normal[axis] = sides[a].positive ? 1.0 : -1.0;
        f.sides[0].dist = std::abs(coord - mesh.cells[sides[a].cell].center[axis]);
        mesh.faces.push_back(f);
      }
    }
  }

  mesh.finalize();
  return mesh;
}

}  // namespace

Mesh build_box_mesh(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& resolution,
                    int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("mesh: dim must be 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (resolution[a] < 1) throw std::invalid_argument("mesh: resolution must be >= 1 per axis");
    if (!(hi[a] - lo[a] > 0.0)) throw std::invalid_argument("mesh: degenerate box domain");
  }

  // Grid lines are computed once per axis so shared planes match bit-exactly.
  std::array<std::vector<double>, 3> lines;
  for (int a = 0; a < dim; ++a) {
    const int n = resolution[a];
    lines[a].resize(n + 1);
    for (int i = 0; i <= n; ++i)
      lines[a][i] = (i == 0) ? lo[a] : (i == n ? hi[a] : lo[a] + (hi[a] - lo[a]) * i / n);
  }

  const int nx = resolution[0];
  const int ny = resolution[1];
  const int nz = dim == 3 ? resolution[2] : 1;
  std::vector<Box> boxes;
  boxes.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Box b;
        b.lo = Vec3::Zero();
        b.hi = Vec3::Zero();
        b.lo[0] = lines[0][i];
        b.hi[0] = lines[0][i + 1];
        b.lo[1] = lines[1][j];
        b.hi[1] = lines[1][j + 1];
        if (dim == 3) {
          b.lo[2] = lines[2][k];
          b.hi[2] = lines[2][k + 1];
        }
        boxes.push_back(b);
      }
  return build_from_boxes(dim, boxes);
}

Mesh refine_random(const Mesh& mesh, double probability, std::uint64_t seed) {
  if (probability < 0.0 || probability > 1.0)
    throw std::invalid_argument("mesh: refinement probability must be in [0,1]");
  for (const Cell& c : mesh.cells)
    if (!c.has_box)
      throw std::invalid_argument("mesh: refine_random requires a generated box mesh");

  std::mt19937_64 rng(seed);
  auto draw = [&rng]() {
    // Explicit uniform in [0,1); distributions are not portable across
    // standard library implementations.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  std::vector<char> selected(mesh.cells.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
    if (draw() < probability) {
      selected[i] = 1;
      any = true;
    }
  }
  if (!any) return mesh;

  const int dim = mesh.dim;
  const int n_children = 1 << dim;
  std::vector<Box> boxes;
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
    const Cell& c = mesh.cells[i];
    if (!selected[i]) {
      boxes.push_back({c.box_lo, c.box_hi});
      continue;
    }
    Vec3 mid = 0.5 * (c.box_lo + c.box_hi);
    for (int child = 0; child < n_children; ++child) {
      Box b;
      b.lo = Vec3::Zero();
      b.hi = Vec3::Zero();
      for (int a = 0; a < dim; ++a) {
        const bool upper = (child >> a) & 1;
        b.lo[a] = upper ? mid[a] : c.box_lo[a];
        b.hi[a] = upper ? c.box_hi[a] : mid[a];
      }
      boxes.push_back(b);
    }
  }
  Mesh out = build_from_boxes(dim, boxes);

  // Refinement must not create degenerate distances.
  for (const Face& f : out.faces)
    for (int s = 0; s < f.n_sides; ++s)
      if (!(f.sides[s].dist > 0.0))
        throw std::runtime_error("mesh: refinement produced non-positive face distance");
  return out;
}

MeshReport validate(const Mesh& mesh) {
  MeshReport rep;
  rep.quality = mesh.quality();
  rep.identity_rel.reserve(mesh.n_cells());
  rep.normal_sum_rel.reserve(mesh.n_cells());
  const int d = mesh.dim;
  auto flag = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

  for (int K = 0; K < mesh.n_cells(); ++K) {
    const Cell& c = mesh.cells[K];
    if (!(c.measure > 0.0)) flag("cell " + std::to_string(K) + ": non-positive measure");
    if (!(c.diameter > 0.0)) flag("cell " + std::to_string(K) + ": non-positive diameter");

    Eigen::Matrix3d identity_sum = Eigen::Matrix3d::Zero();
    Vec3 normal_sum = Vec3::Zero();
    double area_sum = 0.0, cone_sum = 0.0;
    for (int f : mesh.cell_faces(K)) {
      const Face& face = mesh.faces[f];
      const FaceSide& s = mesh.face_side(f, K);
      if (!(s.dist > 0.0)) flag("face " + std::to_string(f) + ": non-positive distance");
      identity_sum += face.measure * s.normal * (face.center - c.center).transpose();
      normal_sum += face.measure * s.normal;
      area_sum += face.measure;
      cone_sum += face.measure * s.dist;
    }
    identity_sum -= c.measure * Eigen::Matrix3d::Identity();
    if (d == 2) identity_sum(2, 2) = 0.0;  // only the active block is constrained
    const double id_rel = identity_sum.norm() / c.measure;
    const double ns_rel = normal_sum.norm() / area_sum;
    const double cs_rel = std::abs(cone_sum / d - c.measure) / c.measure;
    rep.identity_rel.push_back(id_rel);
    rep.normal_sum_rel.push_back(ns_rel);
    rep.max_identity_rel = std::max(rep.max_identity_rel, id_rel);
    rep.max_normal_sum_rel = std::max(rep.max_normal_sum_rel, ns_rel);
    rep.max_cone_sum_rel = std::max(rep.max_cone_sum_rel, cs_rel);
    if (id_rel > 1e-12) flag("cell " + std::to_string(K) + ": gradient identity residual");
    if (ns_rel > 1e-12) flag("cell " + std::to_string(K) + ": boundary normals do not close");
  }

  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    if (!(face.measure > 0.0)) flag("face " + std::to_string(f) + ": non-positive measure");
    for (int s = 0; s < face.n_sides; ++s)
      if (std::abs(face.sides[s].normal.norm() - 1.0) > 1e-12)
        flag("face " + std::to_string(f) + ": non-unit normal");
    if (face.n_sides == 2 &&
        (face.sides[0].normal + face.sides[1].normal).norm() > 1e-12)
      flag("face " + std::to_string(f) + ": interior normals not opposite");
  }
  return rep;
}

std::string MeshReport::summary() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "h = %.6g, theta = %.6g\n"
                "max gradient-identity residual (rel): %.3e\n"
                "max normal-closure residual (rel):    %.3e\n"
                "max cone-measure residual (rel):      %.3e\n",
                quality.h, quality.theta, max_identity_rel, max_normal_sum_rel,
                max_cone_sum_rel);
  os << buf;
  if (violations.empty()) {
    os << "all invariants satisfied\n";
  } else {
    os << violations.size() << " violation(s):\n";
    for (const std::string& v : violations) os << "  - " << v << "\n";
  }
  return os.str();
}

}  // namespace hfv
