#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hfv/config.hpp"
#include "hfv/solver.hpp"

#include <cmath>

using namespace hfv;

namespace {

// Single-cell problem with zero-flux faces everywhere: linear beta, identity
// tensor, no convection or reaction, constant source.
ProblemSpec one_cell_problem(double q0) {
  ProblemSpec spec;
  spec.name = "one-cell";
  spec.dim = 3;
  spec.domain_lo = Vec3(0, 0, 0);
  spec.domain_hi = Vec3(1, 1, 1);
  spec.beta.beta.value = [](double u) { return u; };
  spec.beta.beta.derivative = [](double) { return 1.0; };
  spec.beta.inverse = spec.beta.beta;
  spec.beta.linear = true;
  spec.reaction.F.value = [](double) { return 0.0; };
  spec.reaction.F.derivative = [](double) { return 0.0; };
  spec.region_of = [](const Vec3&) { return 0; };
  spec.diffusion = [](const Vec3&, int) { return Eigen::Matrix3d::Identity().eval(); };
  spec.velocity = [](const Vec3&, int) { return Vec3::Zero(); };
  spec.source = [q0](const Vec3&, double) { return q0; };
  spec.initial = [](const Vec3&) { return 0.0; };
  spec.dirichlet = [](const Vec3&, double) { return 0.0; };
  spec.boundary_kind = [](const Vec3&) { return ProblemSpec::BC::zero_flux; };
  return spec;
}

RunConfig affine_config(const std::string& extra_solver = "") {
  // Stationary affine state: the scheme reproduces it to machine precision.
  const std::string text =
      "[problem]\n"
      "type = custom\n"
      "beta = linear\n"
      "dim = 3\n"
      "domain = 0 1 0 1 0 1\n"
      "lambda = 1\n"
      "velocity = 0 0 0\n"
      "u0 = 1+2*x1-x2+0.5*x3\n"
      "exact = 1+2*x1-x2+0.5*x3\n"
      "[mesh]\n"
      "resolution = 3 2 2\n"
      "refine_probability = 0.5\n"
      "seed = 4\n"
      "[time]\n"
      "T = 0.5\n"
      "N = 3\n" +
      (extra_solver.empty() ? std::string() : "[solver]\n" + extra_solver);
  return parse_config_text(text);
}

}  // namespace

TEST_CASE("initialize: centroid cell values and boundary-aware face values") {
  {
    const ProblemSpec spec = make_test2(0.2, 0.8, 0.01);
    const Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, {8, 8, 8});
    const DiscreteField u0 = initialize(mesh, spec);
    for (int K = 0; K < mesh.n_cells(); ++K) {
      if (mesh.cells[K].center[0] > 0.2)
        CHECK(u0.cell[K] == 0.0);  // cell centroid beyond the initial front
      else
        CHECK(u0.cell[K] == doctest::Approx(spec.exact(mesh.cells[K].center, 0.0)));
    }
  }
  {
    const ProblemSpec spec = make_test1();
    const Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, {4, 2, 2});
    const DiscreteField u0 = initialize(mesh, spec);
    const Vec3 c = mesh.cells[0].center;
    CHECK(u0.cell[0] == doctest::Approx(std::exp(c[0] + c[1] + c[2] - 3.0)).epsilon(1e-14));
    // Dirichlet faces take the boundary data at t = 0.
    for (int f = 0; f < mesh.n_faces(); ++f)
      if (!mesh.faces[f].interior())
        CHECK(u0.face[f] == doctest::Approx(spec.exact(mesh.faces[f].center, 0.0)));
  }
}

TEST_CASE("one-cell residual matches the hand-assembled system") {
  const ProblemSpec spec = one_cell_problem(3.0);
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const Scheme scheme(mesh, spec, 0.0, false);
  REQUIRE(scheme.n_cell_unknowns() == 1);
  REQUIRE(scheme.n_face_unknowns() == 6);

  const double dt = 0.1;
  Eigen::VectorXd state(7);
  state << 0.7, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  Eigen::VectorXd beta_prev = Eigen::VectorXd::Constant(1, 0.25);

  const Eigen::VectorXd r = scheme.residual(state, beta_prev, dt, dt);
  // Unit cube with unit tensor reduces to the two-point coefficient 2 per
  // face; the cell row is m*(u - u_old) + dt*sum(2*(u - u_sigma)) - dt*m*q.
  double flux_sum = 0.0;
  for (int j = 0; j < 6; ++j) flux_sum += 2.0 * (state[0] - state[1 + j]);
  CHECK(r[0] == doctest::Approx(1.0 * (0.7 - 0.25) + dt * flux_sum - dt * 3.0).epsilon(1e-14));
  for (int j = 0; j < 6; ++j)
    CHECK(r[1 + j] == doctest::Approx(2.0 * (state[0] - state[1 + j])).epsilon(1e-14));

  // Jacobian blocks of the same system.
  const BlockSystem sys = scheme.linearize(state, beta_prev, dt, dt);
  CHECK(sys.cell_diag[0] == doctest::Approx(1.0 + dt * 12.0).epsilon(1e-14));
  REQUIRE(sys.coupling[0].size() == 6);
  for (const CellCoupling& c : sys.coupling[0]) {
    CHECK(c.cell_row == doctest::Approx(-2.0 * dt).epsilon(1e-14));
    CHECK(c.face_row == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("one-cell step has the analytic solution and both paths agree") {
  const ProblemSpec spec = one_cell_problem(3.0);
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const TimeGrid grid{0.1, 1};

  RunResult full, condensed;
  for (bool cond : {false, true}) {
    SolverSetup setup;
    setup.newton.condense = cond;
    setup.newton.switch_variables = false;
    RunResult& result = cond ? condensed : full;
    result = run(mesh, spec, grid, setup);
    REQUIRE(result.completed);
    // Zero-flux box with constant source: u = dt*q everywhere after one step.
    CHECK(result.history[1].cell[0] == doctest::Approx(0.3).epsilon(1e-12));
    for (int f = 0; f < 6; ++f)
      CHECK(result.history[1].face[f] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(result.diagnostics.steps[0].newton_iters <= 1);
  }
  for (int f = 0; f < 6; ++f)
    CHECK(full.history[1].face[f] ==
          doctest::Approx(condensed.history[1].face[f]).epsilon(1e-12));
}

TEST_CASE("condensation kernel: identity diagonal without coupling is a no-op") {
  BlockSystem sys;
  sys.n_cell = 2;
  sys.n_face = 3;
  sys.cell_diag = Eigen::Vector2d(1.0, 1.0);
  sys.r_cell = Eigen::Vector2d(0.5, -0.25);
  sys.r_face = Eigen::Vector3d(1.0, 2.0, 3.0);
  sys.coupling.resize(2);
  sys.face_face.emplace_back(0, 0, 4.0);
  sys.face_face.emplace_back(1, 1, 5.0);
  sys.face_face.emplace_back(2, 2, 6.0);
  sys.face_face.emplace_back(0, 2, -1.0);

  const CondensedSystem red = condense(sys);
  CHECK(red.residual.isApprox(sys.r_face));
  CHECK(red.matrix.coeff(0, 0) == 4.0);
  CHECK(red.matrix.coeff(1, 1) == 5.0);
  CHECK(red.matrix.coeff(2, 2) == 6.0);
  CHECK(red.matrix.coeff(0, 2) == -1.0);
  CHECK(red.matrix.nonZeros() == 4);

  const Eigen::VectorXd dy = Eigen::Vector3d(0.1, 0.2, 0.3);
  const Eigen::VectorXd dc = recover_cell_update(sys, dy);
  CHECK(dc[0] == doctest::Approx(-0.5));
  CHECK(dc[1] == doctest::Approx(0.25));

  BlockSystem singular = sys;
  singular.cell_diag[0] = 0.0;
  CHECK_THROWS(condense(singular));
}

TEST_CASE("state packing round-trips through the switched variables") {
  const ProblemSpec spec = make_test2(0.2, 0.8, 0.01);
  const Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, {4, 4, 4});
  const Scheme scheme(mesh, spec, 0.0, true);
  const DiscreteField u0 = initialize(mesh, spec);
  const Eigen::VectorXd state = scheme.pack(u0);
  const DiscreteField back = scheme.unpack(state, 0.0);
  CHECK((back.cell - u0.cell).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((back.face - u0.face).lpNorm<Eigen::Infinity>() <= 1e-12);
  // Cell entries hold the transformed variable.
  for (int K = 0; K < mesh.n_cells(); ++K)
    CHECK(state[K] == doctest::Approx(spec.beta.beta.value(u0.cell[K])));
}

TEST_CASE("singular linear systems are reported, not silently solved") {
  LinearCache cache;
  Eigen::SparseMatrix<double> A(2, 2);
  std::vector<Eigen::Triplet<double>> trips = {{0, 0, 1.0}, {0, 1, 1.0},
                                               {1, 0, 1.0}, {1, 1, 1.0}};
  A.setFromTriplets(trips.begin(), trips.end());
  const Eigen::Vector2d b(1.0, 2.0);  // inconsistent right-hand side
  CHECK_THROWS(cache.solve(A, b));

  // A well-posed system through the same cache still works.
  Eigen::SparseMatrix<double> B(2, 2);
  trips = {{0, 0, 2.0}, {1, 1, 4.0}};
  B.setFromTriplets(trips.begin(), trips.end());
  const Eigen::VectorXd x = cache.solve(B, b);
  CHECK(x[0] == doctest::Approx(0.5));
  CHECK(x[1] == doctest::Approx(0.5));
}

TEST_CASE("zero data stays identically zero") {
  ProblemSpec spec = one_cell_problem(0.0);
  spec.boundary_kind = [](const Vec3&) { return ProblemSpec::BC::dirichlet; };
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {2, 2, 2});
  const RunResult result = run(mesh, spec, TimeGrid{1.0, 4}, SolverSetup{});
  REQUIRE(result.completed);
  for (const DiscreteField& u : result.history) {
    CHECK(u.cell.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(u.face.lpNorm<Eigen::Infinity>() == 0.0);
  }
  for (const StepStats& st : result.diagnostics.steps) CHECK(st.newton_iters == 0);
}

TEST_CASE("stationary affine states are reproduced to machine precision") {
  const RunConfig config = affine_config();
  const ProblemSpec spec = make_problem(config.problem);
  const Mesh mesh = make_mesh(config);
  const RunResult result = run(mesh, spec, TimeGrid{config.T, config.N}, make_solver_setup(config));
  REQUIRE(result.completed);
  const DiscreteField& u = result.history.back();
  for (int K = 0; K < mesh.n_cells(); ++K)
    CHECK(u.cell[K] ==
          doctest::Approx(spec.exact(mesh.cells[K].center, config.T)).epsilon(1e-12));
}

TEST_CASE("variable switch on and off agree for linear beta") {
  const RunConfig config = affine_config();
  const ProblemSpec spec = make_problem(config.problem);
  const Mesh mesh = make_mesh(config);

  SolverSetup on, off;
  on.newton.switch_variables = true;
  off.newton.switch_variables = false;
  const RunResult a = run(mesh, spec, TimeGrid{config.T, config.N}, on);
  const RunResult b = run(mesh, spec, TimeGrid{config.T, config.N}, off);
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  CHECK((a.history.back().cell - b.history.back().cell).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((a.history.back().face - b.history.back().face).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("converged steps satisfy local conservation and residual replay") {
  const ProblemSpec spec = make_test1();
  const Mesh mesh =
      refine_random(build_box_mesh(spec.domain_lo, spec.domain_hi, {2, 1, 2}), 0.5, 3);
  const TimeGrid grid{0.2, 4};
  const RunResult result = run(mesh, spec, grid, SolverSetup{});
  REQUIRE(result.completed);
  for (const StepStats& st : result.diagnostics.steps) {
    CHECK(st.flux_defect <= 1e-8);  // face rows are the interface balances
    CHECK(st.residual <= 1e-10);
    CHECK(st.newton_iters >= 1);
  }

  // Reassemble the residual of the final state from scratch.
  const Scheme scheme(mesh, spec, 0.0, true);
  const int n = result.steps_done;
  Eigen::VectorXd state = scheme.pack(result.history[n]);
  const Eigen::VectorXd beta_prev = scheme.beta_cells(scheme.pack(result.history[n - 1]));
  const double scale = scheme.rhs_scale(beta_prev, grid.t(n), grid.dt());
  const Eigen::VectorXd r = scheme.residual(state, beta_prev, grid.t(n), grid.dt());
  CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-10 * scale * 1.01);
}

TEST_CASE("degenerate step from the exact profile converges with the switch") {
  const ProblemSpec spec = make_test2(0.2, 0.8, 0.01);
  const Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, {8, 8, 8});
  const RunResult result = run(mesh, spec, TimeGrid{0.02, 2}, SolverSetup{});
  REQUIRE(result.completed);
  for (const StepStats& st : result.diagnostics.steps) {
    CHECK(st.newton_iters >= 1);
    CHECK(st.residual <= 1e-10);
  }
  CHECK(result.diagnostics.linf_l2_u > 0.0);
  CHECK(result.diagnostics.grad_l2_qt() > 0.0);
}

TEST_CASE("newton failure aborts with partial history") {
  const ProblemSpec spec = make_test2(0.2, 0.8, 0.0001);
  const Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, {4, 4, 4});
  SolverSetup setup;
  setup.newton.max_iter = 1;  // cannot converge in one iteration
  const RunResult result = run(mesh, spec, TimeGrid{0.5, 2}, setup);
  CHECK(!result.completed);
  CHECK(result.steps_done == 0);
  CHECK(result.history.size() == 1);
  CHECK(result.failure.find("step 1") != std::string::npos);
}

TEST_CASE("time-step restriction warning for non-monotone reactions") {
  ProblemSpec spec = one_cell_problem(0.0);
  spec.reaction.lower = 4.0;  // declared decrease bound
  spec.beta.lower_slope = 1.0;
  const Mesh mesh = build_box_mesh(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const RunResult result = run(mesh, spec, TimeGrid{1.0, 2}, SolverSetup{});  // dt = 0.5 >= 0.25
  CHECK(!result.diagnostics.warnings.empty());
  const RunResult fine = run(mesh, spec, TimeGrid{1.0, 8}, SolverSetup{});  // dt = 0.125 < 0.25
  CHECK(fine.diagnostics.warnings.empty());
}

TEST_CASE("2d problems run through the same solver") {
  const std::string text =
      "[problem]\n"
      "type = custom\n"
      "beta = linear\n"
      "dim = 2\n"
      "domain = 0 1 0 1\n"
      "lambda = 1\n"
      "velocity = 0 0\n"
      "u0 = x1*x2\n"
      "exact = x1*x2\n"
      "[mesh]\n"
      "resolution = 4 4\n"
      "refine_probability = 0.5\n"
      "seed = 2\n"
      "[time]\n"
      "T = 0.1\n"
      "N = 2\n";
  const RunConfig config = parse_config_text(text);
  const ProblemSpec spec = make_problem(config.problem);
  const Mesh mesh = make_mesh(config);
  CHECK(mesh.dim == 2);
  const RunResult result = run(mesh, spec, TimeGrid{config.T, config.N}, make_solver_setup(config));
  CHECK(result.completed);
}
