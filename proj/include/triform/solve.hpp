#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "triform/fem.hpp"
#include "triform/mesh.hpp"
#include "triform/weakform.hpp"

namespace triform {

/// Dirichlet condition on one field over one tagged boundary region.
/// field 0 constrains pressure, 1..dim the velocity components. When two
/// conditions meet at a shared node (e.g. a cavity corner), the higher
/// priority wins; equal priorities prescribing different values raise
/// ConflictingBC.
struct BoundaryCondition {
  int tag = 0;
  int field = 0;
  std::function<double(const Point&, double)> value;
  int priority = 0;
};

enum class LinearSolverKind { DirectLU, BiCGStab };

struct LinearSolverConfig {
  LinearSolverKind kind = LinearSolverKind::DirectLU;
  double tol = 1e-9;    // iterative only
  int max_iter = 4000;  // iterative only
};

/// Multiplies every Dirichlet value by min(t / t_ramp, 1); t_ramp <= 0
/// disables ramping.
struct RampSpec {
  double t_ramp = 0.0;
  double factor(double t) const;
};

enum class GaugeMode {
  Auto,  // pin one pressure node iff no pressure condition exists
  Node,  // pin the given node (when no pressure condition exists)
  Off,   // never pin; all-velocity problems become SingularSystem
};

struct PressureGauge {
  GaugeMode mode = GaugeMode::Auto;
  int node = -1;        // for GaugeMode::Node
  double value = 0.0;   // pinned pressure (not subject to ramping)
};

struct SolverConfig {
  double dt = 0.0;
  double t_end = 0.0;
  double newton_tol = 0.0;  // <= 0 selects 1e-8 * sqrt(total dofs)
  int newton_max_iter = 25;
  LinearSolverConfig linear;
  RampSpec ramp;
  PressureGauge gauge;
  double steady_tol = 0.0;  // > 0: stop once the step-to-step change
                            // drops below steady_tol (relative)
  int n_threads = 1;        // assembly kernels only
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> increment_norms;
  bool converged = false;
};

/// One resolved Dirichlet DOF. Conditions were already reduced to the
/// winning priority; several sources survive only when they tied, and
/// they must then agree at every evaluation time.
struct ConstraintEntry {
  std::int64_t dof = 0;
  int node = 0;
  int field = 0;
  std::vector<const BoundaryCondition*> sources;  // empty => gauge pin
};

struct ConstraintSet {
  std::vector<ConstraintEntry> entries;  // ascending dof
  bool has_pressure = false;
  int gauge_node = -1;        // -1 when no gauge pin was added
  double gauge_value = 0.0;   // pressure at the pinned node
};

/// Resolves conditions to constrained DOFs, applies the priority rule,
/// and installs the pressure gauge when needed. All-velocity problems
/// with the gauge off raise SingularSystem here, up front.
ConstraintSet build_constraints(const Mesh& mesh, const DofMap& dofmap,
                                const std::vector<BoundaryCondition>& bcs,
                                const PressureGauge& gauge = {});

struct DirichletValue {
  std::int64_t dof = 0;
  double value = 0.0;
};

/// Prescribed values at one time (ramp applied). Tied sources that
/// disagree raise ConflictingBC.
std::vector<DirichletValue> evaluate_constraints(const ConstraintSet& set,
                                                 const Mesh& mesh, double t,
                                                 const RampSpec& ramp = {});

/// Row replacement: residual[dof] := state[dof] - prescribed, Jacobian
/// row := unit diagonal, so the Newton increment lands the DOF exactly
/// on its prescribed value.
void apply_dirichlet(SparseSystem& sys, const Eigen::VectorXd& state,
                     const std::vector<DirichletValue>& values);

/// Convenience form matching the one-shot use: build, evaluate at t,
/// apply.
void apply_dirichlet(SparseSystem& sys, const DofMap& dofmap,
                     const Mesh& mesh,
                     const std::vector<BoundaryCondition>& bcs,
                     const Eigen::VectorXd& state, double t,
                     const PressureGauge& gauge = {},
                     const RampSpec& ramp = {});

/// Solves A x = rhs for the assembled sparse matrix. Direct path factors
/// with UMFPACK and verifies the back-substituted residual to 1e-10
/// relative (one refinement pass if needed); failure to factor raises
/// SingularSystem, failure to reach the tolerance LinearSolveFailure.
Eigen::VectorXd linear_solve(const SparseSystem& sys,
                             const Eigen::VectorXd& rhs,
                             const LinearSolverConfig& cfg = {});

/// Newton increment: solves J dP = -F for the system's own residual.
Eigen::VectorXd linear_solve(const SparseSystem& sys,
                             const LinearSolverConfig& cfg = {});

/// One transient problem: mesh, material, conditions, and solver
/// settings. Owns its workspace; independent instances may run
/// concurrently.
class FlowProblem {
 public:
  FlowProblem(const Mesh& mesh, MaterialParams params,
              std::vector<BoundaryCondition> bcs, SolverConfig cfg);

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofmap() const { return dofmap_; }
  const SolverConfig& config() const { return cfg_; }
  const ConstraintSet& constraints() const { return constraints_; }
  double newton_tol() const;

  /// Rest state: v = 0, p = 0 at the given time.
  FieldState rest_state(double time = 0.0) const;

  /// Newton iteration at fixed time t: repeat J dP = -F, P += dP until
  /// ||dP|| <= tol (Euclidean over all DOFs). Non-convergence is
  /// reported, not thrown; linear-solver trouble propagates as
  /// SingularSystem / LinearSolveFailure.
  std::pair<FieldState, NewtonReport> newton_solve(const FieldState& prev,
                                                   const FieldState& guess,
                                                   double t);

  using StepCallback =
      std::function<void(int step, const FieldState&, const NewtonReport&)>;

  struct MarchResult {
    FieldState state;       // last computed state (partial on failure)
    int steps_taken = 0;
    bool completed = false;
    bool reached_steady = false;
    std::string failure;    // empty unless a step failed to converge
    std::vector<NewtonReport> reports;
  };

  /// Backward-Euler marching from rest (or `initial`) to t_end. The
  /// callback fires after every accepted step. A non-converged step
  /// aborts the march; the partial result is flagged via `completed`.
  MarchResult time_march(const StepCallback& callback = {},
                         const FieldState* initial = nullptr);

 private:
  Eigen::VectorXd newton_increment();

  const Mesh* mesh_;
  MaterialParams params_;
  std::vector<BoundaryCondition> bcs_;
  SolverConfig cfg_;
  DofMap dofmap_;
  QuadratureRule quad_;
  ConstraintSet constraints_;
  SparseSystem sys_;
  // Direct-solver state kept across Newton iterations and time steps so
  // the symbolic analysis of the (fixed) sparsity pattern runs only once.
  struct DirectCache;
  std::shared_ptr<DirectCache> direct_;
};

/// Assembly thread count from the environment (TRIFORM_THREADS),
/// defaulting to 1; values < 1 are clamped to 1.
int assembly_threads_from_env();

}  // namespace triform
