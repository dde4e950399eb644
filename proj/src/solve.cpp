#include "triform/solve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "triform/errors.hpp"

namespace triform {

double RampSpec::factor(double t) const {
  if (t_ramp <= 0.0) return 1.0;
  return std::min(t / t_ramp, 1.0);
}

namespace {

int nearest_node_to_min_corner(const Mesh& mesh) {
  Point lo = mesh.nodes.front();
  for (const Point& x : mesh.nodes)
    for (int c = 0; c < 3; ++c) lo[c] = std::min(lo[c], x[c]);
  int best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double e = mesh.nodes[i][c] - lo[c];
      d += e * e;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

ConstraintSet build_constraints(const Mesh& mesh, const DofMap& dofmap,
                                const std::vector<BoundaryCondition>& bcs,
                                const PressureGauge& gauge) {
  std::set<std::pair<int, int>> tag_field;
  for (const auto& bc : bcs) {
    if (bc.field < 0 || bc.field > mesh.dim)
      throw InvalidArgument("boundary condition field out of range");
    if (!bc.value)
      throw InvalidArgument("boundary condition without a value function");
    if (!tag_field.insert({bc.tag, bc.field}).second) {
      std::ostringstream msg;
      msg << "two conditions for field " << bc.field << " on region "
          << bc.tag;
      throw InvalidArgument(msg.str());
    }
  }

  struct Source {
    int priority;
    const BoundaryCondition* bc;
  };
  std::map<std::int64_t, std::vector<Source>> per_dof;
  for (const auto& bc : bcs)
    for (int node : region_nodes(mesh, bc.tag))
      per_dof[dofmap.dof(node, bc.field)].push_back({bc.priority, &bc});

  ConstraintSet set;
  for (auto& [dof, sources] : per_dof) {
    int top = sources.front().priority;
    for (const Source& s : sources) top = std::max(top, s.priority);
    ConstraintEntry entry;
    entry.dof = dof;
    entry.node = static_cast<int>(dof / dofmap.n_fields());
    entry.field = static_cast<int>(dof % dofmap.n_fields());
    for (const Source& s : sources)
      if (s.priority == top) entry.sources.push_back(s.bc);
    if (entry.field == 0) set.has_pressure = true;
    set.entries.push_back(std::move(entry));
  }

  if (!set.has_pressure) {
    int node = -1;
    switch (gauge.mode) {
      case GaugeMode::Auto:
        node = nearest_node_to_min_corner(mesh);
        break;
      case GaugeMode::Node:
        if (gauge.node < 0 ||
            gauge.node >= static_cast<int>(mesh.n_nodes()))
          throw InvalidArgument("pressure gauge node out of range");
        node = gauge.node;
        break;
      case GaugeMode::Off:
        throw SingularSystem(
            "pressure level undetermined: no pressure condition and the "
            "gauge is disabled");
    }
    const std::int64_t dof = dofmap.dof(node, 0);
    ConstraintEntry entry;
    entry.dof = dof;
    entry.node = node;
    entry.field = 0;
    auto at = std::lower_bound(
        set.entries.begin(), set.entries.end(), dof,
        [](const ConstraintEntry& e, std::int64_t d) { return e.dof < d; });
    set.entries.insert(at, std::move(entry));
    set.gauge_node = node;
    set.gauge_value = gauge.value;
  }
  return set;
}

std::vector<DirichletValue> evaluate_constraints(const ConstraintSet& set,
                                                 const Mesh& mesh, double t,
                                                 const RampSpec& ramp) {
  const double factor = ramp.factor(t);
  std::vector<DirichletValue> out;
  out.reserve(set.entries.size());
  for (const ConstraintEntry& e : set.entries) {
    double v = set.gauge_value;  // gauge pin (not ramped)
    if (!e.sources.empty()) {
      const Point& x = mesh.nodes[e.node];
      v = e.sources.front()->value(x, t);
      for (std::size_t s = 1; s < e.sources.size(); ++s) {
        const double w = e.sources[s]->value(x, t);
        if (std::abs(w - v) >
            1e-12 * std::max({1.0, std::abs(v), std::abs(w)})) {
          std::ostringstream msg;
          msg << "conditions disagree at node " << e.node << " field "
              << e.field << " (t=" << t << "): " << v << " vs " << w;
          throw ConflictingBC(msg.str());
        }
      }
      v *= factor;
    }
    out.push_back({e.dof, v});
  }
  return out;
}

void apply_dirichlet(SparseSystem& sys, const Eigen::VectorXd& state,
                     const std::vector<DirichletValue>& values) {
  for (const DirichletValue& d : values) {
    sys.residual[d.dof] = state[d.dof] - d.value;
    bool diagonal = false;
    for (std::int64_t k = sys.row_ptr[d.dof]; k < sys.row_ptr[d.dof + 1];
         ++k) {
      if (sys.col_idx[k] == d.dof) {
        sys.values[k] = 1.0;
        diagonal = true;
      } else {
        sys.values[k] = 0.0;
      }
    }
    if (!diagonal)
      throw PatternViolation("constrained row lacks its diagonal entry");
  }
}

void apply_dirichlet(SparseSystem& sys, const DofMap& dofmap, const Mesh& mesh,
                     const std::vector<BoundaryCondition>& bcs,
                     const Eigen::VectorXd& state, double t,
                     const PressureGauge& gauge, const RampSpec& ramp) {
  const ConstraintSet set = build_constraints(mesh, dofmap, bcs, gauge);
  apply_dirichlet(sys, state, evaluate_constraints(set, mesh, t, ramp));
}

namespace {

using ColMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

ColMat to_eigen(const SparseSystem& sys) {
  std::vector<int> outer(sys.row_ptr.begin(), sys.row_ptr.end());
  Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> map(
      sys.n, sys.n, static_cast<int>(sys.values.size()), outer.data(),
      sys.col_idx.data(), sys.values.data());
  return ColMat(map);
}

/// Solve with a ready factorization, verify the back-substitution via
/// the backward error |Ax-b| / (|A| |x| + |b|), and run one refinement
/// pass before giving up.
template <class Factorization>
Eigen::VectorXd solve_checked(Factorization& lu, const ColMat& A,
                              const Eigen::VectorXd& rhs) {
  const double anorm =
      Eigen::VectorXd(A.cwiseAbs() * Eigen::VectorXd::Ones(A.cols()))
          .maxCoeff();  // infinity norm
  const auto backward_error = [&](const Eigen::VectorXd& x) {
    const double scale = anorm * x.norm() + rhs.norm();
    if (scale == 0.0) return 0.0;
    return (A * x - rhs).norm() / scale;
  };
  Eigen::VectorXd x = lu.solve(rhs);
  if (backward_error(x) > 1e-10) {
    x += lu.solve(Eigen::VectorXd(rhs - A * x));  // one refinement pass
    if (backward_error(x) > 1e-10)
      throw LinearSolveFailure("direct solve residual above tolerance");
  }
  return x;
}

}  // namespace

Eigen::VectorXd linear_solve(const SparseSystem& sys,
                             const Eigen::VectorXd& rhs,
                             const LinearSolverConfig& cfg) {
  if (rhs.size() != sys.n)
    throw InvalidArgument("right-hand side size does not match the system");
  const ColMat A = to_eigen(sys);

  if (cfg.kind == LinearSolverKind::BiCGStab) {
    Eigen::BiCGSTAB<ColMat, Eigen::IncompleteLUT<double, int>> solver;
    solver.preconditioner().setDroptol(1e-7);
    solver.preconditioner().setFillfactor(60);
    solver.setTolerance(cfg.tol);
    solver.setMaxIterations(cfg.max_iter);
    solver.compute(A);
    if (solver.info() != Eigen::Success)
      throw SingularSystem("iterative solver setup failed");
    Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw LinearSolveFailure("iterative solver did not converge");
    return x;
  }

  Eigen::UmfPackLU<ColMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SingularSystem("sparse LU factorization failed");
  return solve_checked(lu, A, rhs);
}

Eigen::VectorXd linear_solve(const SparseSystem& sys,
                             const LinearSolverConfig& cfg) {
  return linear_solve(sys, Eigen::VectorXd(-sys.residual), cfg);
}

struct FlowProblem::DirectCache {
  ColMat A;
  Eigen::UmfPackLU<ColMat> lu;
  bool analyzed = false;
};

Eigen::VectorXd FlowProblem::newton_increment() {
  if (cfg_.linear.kind != LinearSolverKind::DirectLU)
    return linear_solve(sys_, cfg_.linear);
  if (!direct_) direct_ = std::make_shared<DirectCache>();
  DirectCache& c = *direct_;
  c.A = to_eigen(sys_);
  if (!c.analyzed) {
    c.lu.analyzePattern(c.A);
    c.analyzed = true;
  }
  c.lu.factorize(c.A);
  if (c.lu.info() != Eigen::Success)
    throw SingularSystem("sparse LU factorization failed");
  return solve_checked(c.lu, c.A, Eigen::VectorXd(-sys_.residual));
}

FlowProblem::FlowProblem(const Mesh& mesh, MaterialParams params,
                         std::vector<BoundaryCondition> bcs, SolverConfig cfg)
    : mesh_(&mesh),
      params_(std::move(params)),
      bcs_(std::move(bcs)),
      cfg_(cfg),
      dofmap_(build_dofmap(mesh)),
      quad_(quadrature(mesh.dim, 3)) {
  check_material(params_);
  if (!(cfg_.dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (cfg_.t_end < 0.0) throw InvalidArgument("t_end must be non-negative");
  if (cfg_.newton_max_iter < 1)
    throw InvalidArgument("newton_max_iter must be at least 1");
  if (cfg_.steady_tol < 0.0)
    throw InvalidArgument("steady_tol must be non-negative");
  if (cfg_.n_threads < 1) cfg_.n_threads = 1;
  constraints_ = build_constraints(mesh, dofmap_, bcs_, cfg_.gauge);
  sys_ = build_sparse_system(mesh, dofmap_);
}

double FlowProblem::newton_tol() const {
  if (cfg_.newton_tol > 0.0) return cfg_.newton_tol;
  return 1e-8 * std::sqrt(static_cast<double>(dofmap_.total_dofs()));
}

FieldState FlowProblem::rest_state(double time) const {
  FieldState s;
  s.values = Eigen::VectorXd::Zero(dofmap_.total_dofs());
  s.time = time;
  return s;
}

std::pair<FieldState, NewtonReport> FlowProblem::newton_solve(
    const FieldState& prev, const FieldState& guess, double t) {
  FieldState state = guess;
  state.time = t;
  NewtonReport report;
  const double tol = newton_tol();
  const auto dirichlet =
      evaluate_constraints(constraints_, *mesh_, t, cfg_.ramp);

  for (int it = 0; it < cfg_.newton_max_iter; ++it) {
    assemble_system(*mesh_, dofmap_, quad_, state.values, prev.values,
                    params_, cfg_.dt, t, sys_, /*want_jacobian=*/true,
                    cfg_.n_threads);
    apply_dirichlet(sys_, state.values, dirichlet);
    const Eigen::VectorXd dp = newton_increment();
    state.values += dp;
    const double norm = dp.norm();
    report.increment_norms.push_back(norm);
    report.iterations = it + 1;
    if (!std::isfinite(norm)) break;
    if (norm <= tol) {
      report.converged = true;
      break;
    }
  }
  return {std::move(state), report};
}

FlowProblem::MarchResult FlowProblem::time_march(const StepCallback& callback,
                                                 const FieldState* initial) {
  MarchResult result;
  FieldState prev = initial ? *initial : rest_state(0.0);
  result.state = prev;

  const double dt = cfg_.dt;
  const auto n_steps = static_cast<long>(std::ceil(cfg_.t_end / dt - 1e-9));
  for (long k = 1; k <= n_steps; ++k) {
    const double t = prev.time + dt;
    auto [state, report] = newton_solve(prev, prev, t);
    result.reports.push_back(report);
    if (!report.converged) {
      std::ostringstream msg;
      msg << "Newton did not converge at t=" << t << " after "
          << report.iterations << " iterations (last |dP|="
          << (report.increment_norms.empty()
                  ? 0.0
                  : report.increment_norms.back())
          << ")";
      result.failure = msg.str();
      result.state = std::move(state);
      return result;
    }
    result.steps_taken = static_cast<int>(k);
    if (callback) callback(static_cast<int>(k), state, report);

    if (cfg_.steady_tol > 0.0) {
      const double change = (state.values - prev.values).norm();
      if (change <= cfg_.steady_tol * std::max(1.0, state.values.norm())) {
        result.reached_steady = true;
        prev = std::move(state);
        break;
      }
    }
    prev = std::move(state);
  }
  result.state = std::move(prev);
  result.completed = true;
  return result;
}

int assembly_threads_from_env() {
  const char* raw = std::getenv("TRIFORM_THREADS");
  if (!raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || v < 1) return 1;
  return static_cast<int>(std::min(v, 64L));
}

}  // namespace triform
