#include "hfv/run_command.hpp"

#include "hfv/mesh_io.hpp"
#include "hfv/verification.hpp"
#include "hfv/version.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hfv {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << content;
  if (!os.good()) throw std::runtime_error("write failed: " + path.string());
}

void write_metadata(const fs::path& dir, const RunConfig& config) {
  std::ostringstream os;
  os << "# self-contained run record; valid as a config file\n";
  os << "# generator: hfv " << version_string() << "\n";
  os << config.echo();
  write_file(dir / "metadata.ini", os.str());
}

void write_snapshot(const fs::path& dir, const Mesh& mesh, const ProblemSpec& spec,
                    const DiscreteField& u, int n) {
  std::vector<double> uv(mesh.n_cells()), bv(mesh.n_cells()), region(mesh.n_cells());
  for (int K = 0; K < mesh.n_cells(); ++K) {
    uv[K] = u.cell[K];
    bv[K] = spec.beta.beta.value(u.cell[K]);
    region[K] = spec.region_of ? spec.region_of(mesh.cells[K].center) : 0;
  }
  char name[32];
  std::snprintf(name, sizeof name, "u_%04d.vtk", n);
  write_vtk(mesh, (dir / name).string(),
            {{"u", uv}, {"beta_u", bv}, {"region", region}});
}

void write_diagnostics_csv(const fs::path& dir, const RunResult& result) {
  std::ostringstream os;
  os << "n,t,newton_iters,residual,flux_defect,l2_u,l2_beta_u\n";
  for (std::size_t i = 0; i < result.diagnostics.steps.size(); ++i) {
    const StepStats& st = result.diagnostics.steps[i];
    os << (i + 1) << "," << num(result.grid.t(static_cast<int>(i) + 1)) << ","
       << st.newton_iters << "," << num(st.residual) << "," << num(st.flux_defect) << ","
       << num(st.l2_u) << "," << num(st.l2_beta_u) << "\n";
  }
  os << "# linf_l2_u = " << num(result.diagnostics.linf_l2_u) << "\n";
  os << "# linf_l2_beta = " << num(result.diagnostics.linf_l2_beta) << "\n";
  os << "# grad_l2_qt = " << num(result.diagnostics.grad_l2_qt()) << "\n";
  write_file(dir / "diagnostics.csv", os.str());
}

void write_errors_csv(const fs::path& dir, const ErrorReport& rep) {
  std::ostringstream os;
  os << "n,t,l2_exact,abs_err,rel_err,Err\n";
  double running = 0.0;
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    running = std::max(running, rep.rel_err[i]);
    os << (i + 1) << "," << num(rep.times[i]) << "," << num(rep.exact_norm[i]) << ","
       << num(rep.abs_err[i]) << "," << num(rep.rel_err[i]) << "," << num(running) << "\n";
  }
  write_file(dir / "errors.csv", os.str());
}

void write_front_data(const fs::path& dir, const Mesh& mesh, const RunResult& result,
                      double p, double v) {
  std::ostringstream os;
  os << "# t front_discrete front_exact\n";
  for (int n = 0; n <= result.steps_done; ++n) {
    const double t = result.grid.t(n);
    double pos;
    try {
      pos = front_position(mesh, result.history[n]);
    } catch (const std::exception&) {
      continue;  // field entirely below the threshold at this time
    }
    os << num(t) << " " << num(pos) << " " << num(v * t + p) << "\n";
  }
  write_file(dir / "front_vs_t.dat", os.str());
}

double exact_range_top(const Mesh& mesh, const ProblemSpec& spec, const TimeGrid& grid) {
  double top = 0.0;
  for (int K = 0; K < mesh.n_cells(); ++K)
    top = std::max(top, spec.initial(mesh.cells[K].center));
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& face = mesh.faces[f];
    if (face.interior() || spec.boundary_kind(face.center) != ProblemSpec::BC::dirichlet)
      continue;
    for (int n = 0; n <= grid.N; ++n)
      top = std::max(top, spec.dirichlet(face.center, grid.t(n)));
  }
  return top;
}

void write_oscillation_csv(const fs::path& dir, const OscillationReport& rep) {
  std::ostringstream os;
  os << "min_u,max_u,undershoot,overshoot\n";
  os << num(rep.min_u) << "," << num(rep.max_u) << "," << num(rep.undershoot) << ","
     << num(rep.overshoot) << "\n";
  write_file(dir / "oscillation.csv", os.str());
}

}  // namespace

CommandResult run_command(const RunConfig& config, bool dry_run, std::ostream& log) {
  CommandResult res;
  const fs::path dir(config.output.dir);
  fs::create_directories(dir);

  const ProblemSpec spec = make_problem(config.problem);
  const Mesh mesh = make_mesh(config);
  const MeshReport mesh_report = validate(mesh);
  write_metadata(dir, config);
  log << "mesh: " << mesh.n_cells() << " cells, " << mesh.n_faces() << " faces, h = "
      << mesh_report.quality.h << ", theta = " << mesh_report.quality.theta << "\n";
  if (!mesh_report.ok()) {
    res.exit_code = 1;
    res.message = "mesh validation failed:\n" + mesh_report.summary();
    return res;
  }
  if (dry_run) {
    log << "dry run: configuration and mesh are valid; metadata written\n";
    return res;
  }

  const TimeGrid grid{config.T, config.N};
  const SolverSetup setup = make_solver_setup(config);
  const RunResult result = run(mesh, spec, grid, setup);
  for (const std::string& w : result.diagnostics.warnings) log << "warning: " << w << "\n";

  write_diagnostics_csv(dir, result);
  if (config.output.vtk) {
    const int stride = config.output.snapshot_stride;
    if (stride > 0)
      for (int n = 0; n <= result.steps_done; n += stride)
        write_snapshot(dir, mesh, spec, result.history[n], n);
    if (result.steps_done >= 0 &&
        (stride == 0 || result.steps_done % stride != 0))
      write_snapshot(dir, mesh, spec, result.history[result.steps_done], result.steps_done);
  }
  {
    const OscillationReport osc = oscillation_report(
        result.history, 0.0, exact_range_top(mesh, spec, grid));
    write_oscillation_csv(dir, osc);
    log << "oscillation: min " << osc.min_u << ", max " << osc.max_u << ", undershoot "
        << osc.undershoot << ", overshoot " << osc.overshoot << "\n";
  }
  if (spec.has_exact() && result.steps_done > 0) {
    RunResult partial = result;  // error metric over the completed steps
    const ErrorReport rep = error_metric(partial, spec, mesh);
    write_errors_csv(dir, rep);
    log << "Err = " << rep.Err << (result.completed ? "" : " (partial run)") << "\n";
  }
  if (config.problem.type == "test2" && spec.has_exact())
    write_front_data(dir, mesh, result, config.problem.p, config.problem.v);

  if (!result.completed) {
    res.exit_code = 2;
    res.message = "solver aborted: " + result.failure + " (partial history written)";
    return res;
  }
  {
    int max_iters = 0;
    long total_iters = 0;
    for (const StepStats& st : result.diagnostics.steps) {
      max_iters = std::max(max_iters, st.newton_iters);
      total_iters += st.newton_iters;
    }
    log << "run complete: " << result.steps_done << " steps, newton iterations avg "
        << static_cast<double>(total_iters) / std::max(1, result.steps_done) << " max "
        << max_iters << "\n";
    log << "sup-t L2(u) = " << result.diagnostics.linf_l2_u << ", sup-t L2(beta(u)) = "
        << result.diagnostics.linf_l2_beta << ", space-time gradient norm = "
        << result.diagnostics.grad_l2_qt() << "\n";
  }
  return res;
}

CommandResult convergence_command(const RunConfig& config, std::ostream& log) {
  CommandResult res;
  const fs::path dir(config.output.dir);
  fs::create_directories(dir);
  write_metadata(dir, config);

  const ProblemSpec spec = make_problem(config.problem);
  const std::array<int, 3> base = effective_resolution(config);
  const double base_p = effective_probability(config);

  std::vector<LevelSpec> levels;
  for (int ell = 0; ell < config.convergence.levels; ++ell) {
    LevelSpec level;
    const int factor = 1 << ell;
    level.resolution = {base[0] * factor, base[1] * factor,
                        spec.dim == 3 ? base[2] * factor : 1};
    if (!config.convergence.probabilities.empty()) {
      const auto& ps = config.convergence.probabilities;
      level.refine_probability = ps[std::min<std::size_t>(ell, ps.size() - 1)];
    } else {
      level.refine_probability = base_p;
    }
    level.seed = ell < static_cast<int>(config.convergence.seeds.size())
                     ? config.convergence.seeds[ell]
                     : config.mesh.seed + ell;
    level.N = config.N * factor;
    levels.push_back(level);
  }

  const ConvergenceTable table =
      convergence_study(spec, levels, config.T, make_solver_setup(config));
  write_file(dir / "convergence.csv", table.csv());
  write_file(dir / "err_vs_h.dat", table.err_vs_h());
  log << table.csv();

  for (const ConvergenceRow& row : table.rows)
    if (row.failed) {
      res.exit_code = 2;
      res.message = "a level failed: " + row.failure;
    }
  return res;
}

CommandResult mesh_gen_command(const RunConfig& config, std::ostream& log) {
  CommandResult res;
  const fs::path dir(config.output.dir);
  fs::create_directories(dir);
  write_metadata(dir, config);

  const Mesh mesh = make_mesh(config);
  const MeshReport report = validate(mesh);
  write_mesh(mesh, (dir / "mesh.txt").string());
  if (config.output.vtk) {
    std::vector<double> ids(mesh.n_cells());
    for (int K = 0; K < mesh.n_cells(); ++K) ids[K] = K;
    write_vtk(mesh, (dir / "mesh.vtk").string(), {{"cell_id", ids}});
  }
  log << "mesh: " << mesh.n_cells() << " cells, " << mesh.n_faces() << " faces ("
      << mesh.n_interior_faces() << " interior)\n";
  log << report.summary();
  if (!report.ok()) {
    res.exit_code = 1;
    res.message = "mesh validation failed";
  }
  return res;
}

CommandResult check_command(const RunConfig& config, std::ostream& log) {
  CommandResult res;
  const ProblemSpec spec = make_problem(config.problem);
  const Mesh mesh = make_mesh(config);
  const MeshReport mesh_report = validate(mesh);
  log << "mesh: " << mesh.n_cells() << " cells, " << mesh.n_faces() << " faces\n"
      << mesh_report.summary();
  const HypothesesReport hyp = check_hypotheses(spec);
  log << hyp.summary();
  if (!mesh_report.ok()) {
    res.exit_code = 1;
    res.message = "mesh validation failed";
  }
  return res;
}

}  // namespace hfv
