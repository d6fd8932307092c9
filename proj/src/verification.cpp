#include "hfv/verification.hpp"

#include "hfv/mesh_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hfv {

ErrorReport error_metric(const RunResult& result, const ProblemSpec& spec, const Mesh& mesh) {
  if (!spec.has_exact()) throw std::invalid_argument("error_metric: no exact solution");
  ErrorReport rep;
  for (int n = 1; n <= result.steps_done; ++n) {
    const double t = result.grid.t(n);
    const DiscreteField& u = result.history[n];
    double err2 = 0.0, norm2 = 0.0;
    for (int K = 0; K < mesh.n_cells(); ++K) {
      const double ue = spec.exact(mesh.cells[K].center, t);
      const double m = mesh.cells[K].measure;
      err2 += m * (u.cell[K] - ue) * (u.cell[K] - ue);
      norm2 += m * ue * ue;
    }
    const double abs_err = std::sqrt(err2);
    const double norm = std::sqrt(norm2);
    rep.times.push_back(t);
    rep.exact_norm.push_back(norm);
    rep.abs_err.push_back(abs_err);
    if (norm > 0.0) {
      rep.rel_err.push_back(abs_err / norm);
      rep.Err = std::max(rep.Err, abs_err / norm);
    } else {
      rep.rel_err.push_back(abs_err);
      rep.Err = std::max(rep.Err, abs_err);
      rep.absolute_fallback = true;
    }
  }
  return rep;
}

std::string ConvergenceTable::csv() const {
  std::ostringstream os;
  os << "N,h,elements,faces,Err,order,runtime_s\n";
  char buf[256];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ConvergenceRow& r = rows[i];
    if (r.failed) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%d,failed,,%.3f\n", r.N, r.h, r.elements,
                    r.faces, r.runtime_s);
    } else if (i == 0 || rows[i - 1].failed) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%d,%.17g,,%.3f\n", r.N, r.h, r.elements,
                    r.faces, r.Err, r.runtime_s);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%d,%.17g,%.6g,%.3f\n", r.N, r.h, r.elements,
                    r.faces, r.Err, r.order, r.runtime_s);
    }
    os << buf;
  }
  return os.str();
}

std::string ConvergenceTable::err_vs_h() const {
  std::ostringstream os;
  os << "# h Err\n";
  char buf[128];
  for (const ConvergenceRow& r : rows) {
    if (r.failed) continue;
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r.h, r.Err);
    os << buf;
  }
  return os.str();
}

ConvergenceTable convergence_study(const ProblemSpec& spec, const std::vector<LevelSpec>& levels,
                                   double T, const SolverSetup& setup) {
  if (levels.empty()) throw std::invalid_argument("convergence_study: no levels");
  ConvergenceTable table;
  for (const LevelSpec& level : levels) {
    ConvergenceRow row;
    row.N = level.N;
    const auto start = std::chrono::steady_clock::now();
    try {
      Mesh mesh = build_box_mesh(spec.domain_lo, spec.domain_hi, level.resolution, spec.dim);
      if (level.refine_probability > 0.0)
        mesh = refine_random(mesh, level.refine_probability, level.seed);
      row.h = mesh.quality().h;
      row.elements = mesh.n_cells();
      row.faces = mesh.n_faces();

      const TimeGrid grid{T, level.N};
      const RunResult result = run(mesh, spec, grid, setup);
      if (!result.completed) throw std::runtime_error(result.failure);
      row.Err = error_metric(result, spec, mesh).Err;
    } catch (const std::exception& e) {
      row.failed = true;
      row.failure = e.what();
    }
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!row.failed && !table.rows.empty() && !table.rows.back().failed) {
      const ConvergenceRow& prev = table.rows.back();
      row.order = std::log(prev.Err / row.Err) / std::log(prev.h / row.h);
    } else {
      row.order = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double front_position(const Mesh& mesh, const DiscreteField& u, double threshold) {
  double pos = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int K = 0; K < mesh.n_cells(); ++K) {
    if (u.cell[K] > threshold) {
      pos = std::max(pos, mesh.cells[K].center[0]);
      found = true;
    }
  }
  if (!found) throw std::runtime_error("front_position: field entirely below the threshold");
  return pos;
}

OscillationReport oscillation_report(const std::vector<DiscreteField>& history, double range_lo,
                                     double range_hi) {
  if (history.empty()) throw std::invalid_argument("oscillation_report: empty history");
  OscillationReport rep;
  rep.min_u = std::numeric_limits<double>::infinity();
  rep.max_u = -std::numeric_limits<double>::infinity();
  for (const DiscreteField& u : history) {
    if (u.cell.size() > 0) {
      rep.min_u = std::min(rep.min_u, u.cell.minCoeff());
      rep.max_u = std::max(rep.max_u, u.cell.maxCoeff());
    }
  }
  rep.undershoot = std::max(0.0, range_lo - rep.min_u);
  rep.overshoot = std::max(0.0, rep.max_u - range_hi);
  return rep;
}

}  // namespace hfv
