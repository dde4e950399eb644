#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <span>

#include "triform/fem.hpp"
#include "triform/mesh.hpp"

namespace triform {

/// Body force per unit mass as a field of position and time; a null
/// function means zero.
using BodyForce =
    std::function<std::array<double, 3>(const Point&, double)>;

/// Physical inputs of the balance equations. lam is the volume
/// viscosity; it penalizes the velocity divergence numerically and has
/// to stay well above mu for incompressibility to be enforced.
struct MaterialParams {
  double rho = 1.0;  // mass density
  double mu = 1.0;   // shear viscosity
  double lam = 0.0;  // volume viscosity
  BodyForce g;       // specific body force, may be null (zero)
};

/// Throws InvalidArgument unless rho > 0, mu > 0, lam >= 0.
void check_material(const MaterialParams& params);

/// Monolithic nodal coefficients over a DofMap at one time level.
struct FieldState {
  Eigen::VectorXd values;
  double time = 0.0;
};

/// tau = lam*tr(d)*I + 2*mu*d with d = sym(grad_v).
/// grad_v[i][j] = dv_i/dx_j; only the leading dim x dim block is used.
std::array<std::array<double, 3>, 3> deviatoric_stress(
    const std::array<std::array<double, 3>, 3>& grad_v,
    const MaterialParams& params, int dim);

/// Element-level output of the summed weak form (mass tested by dp,
/// momentum tested by dv, momentum tested by grad dp). Local dof order
/// matches the global interleaved layout: node-major, (p, v_1, ..).
struct LocalKernelOutput {
  int size = 0;                         // (dim+1)*(1+dim)
  std::array<double, 16> residual{};
  std::array<double, 256> jacobian{};   // row-major size x size
};

/// Residual of the summed weak form on one cell. P_e / P0_e hold the
/// current and previous-step local coefficients; coords are the cell
/// node positions (for evaluating the body-force field), time is the
/// current step time. dt <= 0 -> InvalidArgument.
LocalKernelOutput element_residual(int dim, const CellGeometry& geom,
                                   const std::array<Point, 4>& coords,
                                   const QuadratureRule& quad,
                                   std::span<const double> P_e,
                                   std::span<const double> P0_e,
                                   const MaterialParams& params, double dt,
                                   double time);

/// Residual plus its exact directional derivative with respect to P_e.
/// The convection term contributes both product-rule branches; every
/// other term is linear in the state.
LocalKernelOutput element_jacobian(int dim, const CellGeometry& geom,
                                   const std::array<Point, 4>& coords,
                                   const QuadratureRule& quad,
                                   std::span<const double> P_e,
                                   std::span<const double> P0_e,
                                   const MaterialParams& params, double dt,
                                   double time);

/// Assembles residual (and Jacobian unless want_jacobian is false) over
/// all cells into sys. Cells are scattered in assembly_order so the
/// result is independent of cell storage order and of n_threads
/// (kernels are evaluated in parallel, scattered serially).
void assemble_system(const Mesh& mesh, const DofMap& dofmap,
                     const QuadratureRule& quad, const Eigen::VectorXd& state,
                     const Eigen::VectorXd& prev, const MaterialParams& params,
                     double dt, double time, SparseSystem& sys,
                     bool want_jacobian = true, int n_threads = 1);

/// A smooth exact (v, p) pair with the derivatives needed to build the
/// matching body force. Velocity must be divergence-free.
struct ManufacturedSolution {
  int dim = 2;
  std::function<std::array<double, 3>(const Point&, double)> velocity;
  std::function<std::array<std::array<double, 3>, 3>(const Point&, double)>
      velocity_gradient;  // [component][derivative]
  std::function<std::array<double, 3>(const Point&, double)> velocity_dt;
  std::function<std::array<double, 3>(const Point&, double)> velocity_laplacian;
  std::function<double(const Point&, double)> pressure;
  std::function<std::array<double, 3>(const Point&, double)> pressure_gradient;
};

/// Body force making the strong momentum equation hold exactly for the
/// manufactured pair. Divergence-freeness is checked on a sample lattice
/// over the unit cube; violations raise InvalidArgument.
BodyForce mms_forcing(const ManufacturedSolution& ms,
                      const MaterialParams& params);

/// Built-in steady divergence-free trigonometric pair on [0,1]^2:
/// v = A*(sin(pi x) cos(pi y), -cos(pi x) sin(pi y)), p = B cos(pi x) cos(pi y).
ManufacturedSolution trig_mms_2d(double velocity_amplitude,
                                 double pressure_amplitude);

}  // namespace triform
