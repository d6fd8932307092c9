#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hfv/discretization.hpp"
#include "hfv/mesh.hpp"

#include <cmath>
#include <random>

using namespace hfv;

namespace {

std::mt19937_64 rng(987654321);

double uniform(double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

DiscreteField random_field(const Mesh& mesh, bool constrained = false) {
  DiscreteField u = DiscreteField::zero(mesh);
  for (int K = 0; K < mesh.n_cells(); ++K) u.cell[K] = uniform(-1, 1);
  for (int f = 0; f < mesh.n_faces(); ++f) u.face[f] = uniform(-1, 1);
  if (constrained) constrain_boundary(mesh, u);
  return u;
}

TensorCoefficient constant_tensor(const Eigen::Matrix3d& lam) {
  return [lam](int, const Vec3&) { return lam; };
}

VectorCoefficient constant_velocity(const Vec3& v) {
  return [v](int, const Vec3&) { return v; };
}

Mesh refined_test_mesh() {
  return refine_random(build_box_mesh(Vec3(0, 0, 0), Vec3(2, 1, 1), {4, 2, 4}), 0.4, 11);
}

// The closed-form per-cone coefficient vectors (default stabilization): the
// assembly is built from the composed gradient maps instead, so this is an
// independent reconstruction.
Eigen::MatrixXd closed_form_A(const Mesh& mesh, int K, const Eigen::Matrix3d& lam) {
  const auto& EK = mesh.cell_faces(K);
  const int n = static_cast<int>(EK.size());
  const Cell& c = mesh.cells[K];
  const double rt = std::sqrt(static_cast<double>(mesh.dim));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int cone = 0; cone < n; ++cone) {
    const Face& fc = mesh.faces[EK[cone]];
    const FaceSide& sc = mesh.face_side(EK[cone], K);
    std::vector<Vec3> y(n);
    for (int j = 0; j < n; ++j) {
      const Face& fj = mesh.faces[EK[j]];
      const FaceSide& sj = mesh.face_side(EK[j], K);
      const double ratio = fj.measure / c.measure;
      if (j == cone) {
        y[j] = ratio * sj.normal +
               rt / sc.dist * (1.0 - ratio * sj.normal.dot(fc.center - c.center)) * sc.normal;
      } else {
        y[j] = ratio * sj.normal -
               rt / sc.dist * ratio * sj.normal.dot(fc.center - c.center) * sc.normal;
      }
    }
    const double cone_measure = fc.measure * sc.dist / mesh.dim;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) A(a, b) += y[a].dot(cone_measure * lam * y[b]);
  }
  return A;
}

}  // namespace

TEST_CASE("constant fields have zero gradient") {
  const Mesh mesh = refined_test_mesh();
  DiscreteField u = DiscreteField::zero(mesh);
  u.cell.setConstant(3.25);
  u.face.setConstant(3.25);
  for (int K = 0; K < mesh.n_cells(); ++K) {
    CHECK(cell_gradient(mesh, u, K).norm() <= 1e-14);
    for (int f : mesh.cell_faces(K))
      CHECK(stabilized_gradient(mesh, u, K, f, 0.0).norm() <= 1e-13);
  }
}

TEST_CASE("gradients are exact on affine fields") {
  const Mesh mesh = refined_test_mesh();
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 a(uniform(-2, 2), uniform(-2, 2), uniform(-2, 2));
    const double b = uniform(-1, 1);
    const DiscreteField u = project(mesh, [&](const Vec3& x) { return a.dot(x) + b; });
    for (int K = 0; K < mesh.n_cells(); ++K) {
      CHECK((cell_gradient(mesh, u, K) - a).norm() <= 1e-12 * (1.0 + a.norm()));
      for (int f : mesh.cell_faces(K))
        CHECK((stabilized_gradient(mesh, u, K, f, 0.0) - a).norm() <= 1e-12 * (1.0 + a.norm()));
    }
  }
}

TEST_CASE("hand-evaluated six-face gradient on the unit cube") {
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  DiscreteField u = DiscreteField::zero(mesh);
  for (int f = 0; f < mesh.n_faces(); ++f) u.face[f] = mesh.faces[f].center[0];
  // sum m(sigma) u_sigma n over the six faces: only the x-faces contribute,
  // (1*1*e_x - 1*0*e_x) = e_x; cell measure 1.
  const Vec3 g = cell_gradient(mesh, u, 0);
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(g[1]) <= 1e-14);
  CHECK(std::abs(g[2]) <= 1e-14);
}

TEST_CASE("stabilization residuals cancel per cell") {
  const Mesh mesh = refined_test_mesh();
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteField u = random_field(mesh);
    for (int K = 0; K < mesh.n_cells(); ++K) {
      // sum of m(D_{K,sigma}) R_{K,sigma} n_{K,sigma} over the cell's faces
      Vec3 sum = Vec3::Zero();
      const Vec3 g = cell_gradient(mesh, u, K);
      for (int f : mesh.cell_faces(K)) {
        const Vec3 stab = stabilized_gradient(mesh, u, K, f, 0.0);
        sum += mesh.cone_measure(f, K) * (stab - g);
      }
      CHECK(sum.norm() <= 1e-12 * (1.0 + g.norm()) * mesh.cells[K].measure * 10);
    }
  }
}

TEST_CASE("cone average of the discrete gradient is the cell gradient") {
  const Mesh mesh = refined_test_mesh();
  const DiscreteField u = random_field(mesh);
  for (int K = 0; K < mesh.n_cells(); ++K) {
    Vec3 avg = Vec3::Zero();
    for (int f : mesh.cell_faces(K))
      avg += mesh.cone_measure(f, K) * stabilized_gradient(mesh, u, K, f, 0.0);
    const Vec3 g = mesh.cells[K].measure * cell_gradient(mesh, u, K);
    CHECK((avg - g).norm() <= 1e-12 * (1.0 + g.norm()));
  }
}

TEST_CASE("cell operators are symmetric and PSD") {
  const Mesh mesh = refined_test_mesh();
  Eigen::Matrix3d lam;
  lam << 8, -5, -2, -5, 20, -7, -2, -7, 19;
  const auto ops =
      assemble_cell_operators(mesh, constant_tensor(lam), constant_velocity(Vec3(4, 0, 0)));
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const Eigen::MatrixXd& A = ops[K].A;
    CHECK((A - A.transpose()).norm() <= 1e-12 * A.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * A.norm());
  }
}

TEST_CASE("zero tensor gives zero operators; invalid tensors are rejected") {
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {2, 2, 2});
  const auto ops = assemble_cell_operators(mesh, constant_tensor(Eigen::Matrix3d::Zero()),
                                           constant_velocity(Vec3::Zero()));
  for (const auto& op : ops) CHECK(op.A.norm() == 0.0);

  Eigen::Matrix3d asym = Eigen::Matrix3d::Identity();
  asym(0, 1) = 1.0;
  CHECK_THROWS(assemble_cell_operators(mesh, constant_tensor(asym),
                                       constant_velocity(Vec3::Zero())));
  Eigen::Matrix3d indef = Eigen::Matrix3d::Identity();
  indef(2, 2) = -1.0;
  CHECK_THROWS(assemble_cell_operators(mesh, constant_tensor(indef),
                                       constant_velocity(Vec3::Zero())));
}

TEST_CASE("closed-form coefficient cross-check at the default stabilization") {
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1.3, 0.8, 1.1), {2, 1, 1});
  Eigen::Matrix3d lam;
  lam << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 4;
  const auto ops =
      assemble_cell_operators(mesh, constant_tensor(lam), constant_velocity(Vec3::Zero()));
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const Eigen::MatrixXd ref = closed_form_A(mesh, K, lam);
    CHECK((ops[K].A - ref).norm() <= 1e-12 * ref.norm());
  }
}

TEST_CASE("two-point flux on axis-aligned boxes with identity tensor") {
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const auto ops = assemble_cell_operators(mesh, constant_tensor(Eigen::Matrix3d::Identity()),
                                           constant_velocity(Vec3::Zero()));
  const DiscreteField u = random_field(mesh);
  const auto& EK = mesh.cell_faces(0);
  for (int j = 0; j < static_cast<int>(EK.size()); ++j) {
    const Face& f = mesh.faces[EK[j]];
    const double two_point =
        f.measure / mesh.face_side(EK[j], 0).dist * (u.cell[0] - u.face[EK[j]]);
    CHECK(diffusive_flux(mesh, ops[0], u, 0, j) == doctest::Approx(two_point).epsilon(1e-12));
  }
}

TEST_CASE("constant fields produce zero diffusive flux") {
  const Mesh mesh = refined_test_mesh();
  const auto ops = assemble_cell_operators(mesh, constant_tensor(Eigen::Matrix3d::Identity()),
                                           constant_velocity(Vec3::Zero()));
  DiscreteField u = DiscreteField::zero(mesh);
  u.cell.setConstant(2.0);
  u.face.setConstant(2.0);
  for (int K = 0; K < mesh.n_cells(); ++K)
    for (int j = 0; j < static_cast<int>(mesh.cell_faces(K).size()); ++j)
      CHECK(std::abs(diffusive_flux(mesh, ops[K], u, K, j)) <= 1e-12);
}

TEST_CASE("flux-side and gradient-side energies agree") {
  const Mesh mesh = refined_test_mesh();
  Eigen::Matrix3d lam;
  lam << 2, 0.5, 0, 0.5, 3, 0.25, 0, 0.25, 1.5;
  const auto tensor = constant_tensor(lam);
  const auto ops = assemble_cell_operators(mesh, tensor, constant_velocity(Vec3::Zero()));
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteField u = random_field(mesh);
    const DiscreteField v = random_field(mesh);
    const double by_flux = bilinear_F(mesh, ops, u, v);
    const double by_grad = diffusion_energy(mesh, tensor, u, v);
    CHECK(by_flux == doctest::Approx(by_grad).epsilon(1e-12));
  }
}

TEST_CASE("upwind traces and sign splits") {
  CHECK(upwind_value(3.0, 5.0, 2.0) * 2.0 == doctest::Approx(6.0));
  CHECK(upwind_value(3.0, 5.0, -2.0) * -2.0 == doctest::Approx(-10.0));
  CHECK(upwind_value(3.0, 5.0, 0.0) * 0.0 == 0.0);

  const Mesh mesh = refined_test_mesh();
  const Vec3 vel(1.5, -0.75, 0.25);
  const auto ops = assemble_cell_operators(mesh, constant_tensor(Eigen::Matrix3d::Identity()),
                                           constant_velocity(vel));
  for (int K = 0; K < mesh.n_cells(); ++K) {
    const auto& EK = mesh.cell_faces(K);
    for (int j = 0; j < static_cast<int>(EK.size()); ++j) {
      CHECK(ops[K].V_plus[j] >= 0.0);
      CHECK(ops[K].V_minus[j] <= 0.0);
      CHECK(ops[K].V_plus[j] + ops[K].V_minus[j] == doctest::Approx(ops[K].V[j]));
      const Face& f = mesh.faces[EK[j]];
      if (f.interior()) {
        const int L = f.sides[0].cell == K ? f.sides[1].cell : f.sides[0].cell;
        const auto& EL = mesh.cell_faces(L);
        int jL = -1;
        for (int k = 0; k < static_cast<int>(EL.size()); ++k)
          if (EL[k] == EK[j]) jL = k;
        REQUIRE(jL >= 0);
        CHECK(ops[K].V[j] == doctest::Approx(-ops[L].V[jL]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("coercivity and convection positivity on random fields") {
  const Mesh mesh = refined_test_mesh();
  Eigen::Matrix3d lam;
  lam << 8, -5, -2, -5, 20, -7, -2, -7, 19;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(lam, Eigen::EigenvaluesOnly);
  const double lambda_lo = es.eigenvalues().minCoeff();
  REQUIRE(lambda_lo > 0.0);

  const auto tensor = constant_tensor(lam);
  const auto ops = assemble_cell_operators(mesh, tensor, constant_velocity(Vec3(4, 0, 0)));
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteField u = random_field(mesh, true);
    const double grad = gradient_l2(mesh, u);
    CHECK(bilinear_F(mesh, ops, u, u) >= lambda_lo * grad * grad - 1e-12);
    CHECK(bilinear_T(mesh, ops, u, u) >= -1e-12);
  }
  const DiscreteField zero = DiscreteField::zero(mesh, true);
  CHECK(bilinear_F(mesh, ops, zero, zero) == 0.0);
  CHECK(bilinear_T(mesh, ops, zero, zero) == 0.0);
}

TEST_CASE("norms: hand value, zero field, discrete Sobolev inequality") {
  const Mesh cube = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  DiscreteField v = DiscreteField::zero(cube);
  v.cell[0] = 1.0;  // all faces zero: |v|_X^2 = 6 * (1/0.5) * 1 = 12
  CHECK(seminorm_X(cube, v) == doctest::Approx(std::sqrt(12.0)).epsilon(1e-14));

  const DiscreteField zero = DiscreteField::zero(cube);
  CHECK(seminorm_X(cube, zero) == 0.0);
  CHECK(norm_1pM(cube, zero.cell, 2.0) == 0.0);
  CHECK_THROWS(norm_1pM(cube, zero.cell, 0.5));

  // p = 1 by hand on the unit cube: six boundary faces, each contributing
  // m(sigma) d_{K,sigma} (|u_K| / d_sigma) = 1 * 0.5 * (1/0.5) = 1.
  CHECK(norm_1pM(cube, v.cell, 1.0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(norm_1pM(cube, v.cell, 2.0) == doctest::Approx(std::sqrt(12.0)).epsilon(1e-14));

  const Mesh mesh = refined_test_mesh();
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteField u = random_field(mesh, true);
    CHECK(norm_1pM(mesh, u.cell, 2.0) <= seminorm_X(mesh, u) * (1.0 + 1e-12));
  }
}

TEST_CASE("gradient/seminorm equivalence ratio stays in a positive interval") {
  const Mesh mesh = refined_test_mesh();
  double lo = 1e300, hi = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteField u = random_field(mesh);
    const double sx = seminorm_X(mesh, u);
    if (sx == 0.0) continue;
    const double ratio = gradient_l2(mesh, u) / sx;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(lo > 0.0);
  CHECK(std::isfinite(hi));
  MESSAGE("gradient/seminorm ratio range: [", lo, ", ", hi, "]");
}

TEST_CASE("projected quadratic gradient error decays with the mesh size") {
  auto phi = [](const Vec3& x) { return x[0] * x[0] + x[1] * x[2]; };
  auto grad_phi = [](const Vec3& x) { return Vec3(2 * x[0], x[2], x[1]); };
  std::vector<double> hs, errs;
  for (int n : {2, 4, 8, 16}) {
    const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {n, n, n});
    const DiscreteField u = project(mesh, phi);
    double err = 0.0;
    for (int K = 0; K < mesh.n_cells(); ++K)
      for (int f : mesh.cell_faces(K)) {
        const Vec3 centroid = mesh.cells[K].center +
                              3.0 / 4.0 * (mesh.faces[f].center - mesh.cells[K].center);
        err = std::max(
            err, (stabilized_gradient(mesh, u, K, f, 0.0) - grad_phi(centroid)).norm());
      }
    hs.push_back(mesh.quality().h);
    errs.push_back(err);
  }
  const double order = std::log(errs.front() / errs.back()) / std::log(hs.front() / hs.back());
  MESSAGE("gradient consistency order: ", order);
  CHECK(order >= 0.9);
}
