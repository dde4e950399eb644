#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "triform/mesh.hpp"
#include "triform/weakform.hpp"

namespace triform {

/// L2 norm of the pressure error against an exact scalar field,
/// integrated cell by cell with the degree-3 rule. The exact field is
/// evaluated at state.time.
double l2_error(const FieldState& state, const Mesh& mesh,
                const std::function<double(const Point&, double)>& exact);

/// L2 norm of the velocity error (all components) against an exact
/// vector field.
double l2_error(
    const FieldState& state, const Mesh& mesh,
    const std::function<std::array<double, 3>(const Point&, double)>& exact);

/// L2 norm of the velocity divergence; exact for P1 (the divergence is
/// constant per cell).
double div_norm(const FieldState& state, const Mesh& mesh);

/// Discrete pressure-gradient energy sum_cells V_c |grad p|^2_c, the
/// checkerboard-mode indicator (spurious pressure modes blow it up).
double pressure_gradient_energy(const FieldState& state, const Mesh& mesh);

struct ForceCoefficients {
  double c_D = 0.0;
  double c_L = 0.0;
  double time = 0.0;
};

/// Drag/lift coefficients from the volume functional
///   c = -2/(v_mean^2 ell) Int( mu/rho v_i,j w_i,j + v_i v_j,i w_j
///                               - p w_i,i ) dv
/// where the test field w is the nodal indicator of the obstacle region
/// (1 on its nodes, 0 on every other node) placed in the drag (x) or
/// lift (y) component.
ForceCoefficients drag_lift(const FieldState& state, const Mesh& mesh,
                            const MaterialParams& params, int obstacle_tag,
                            double v_mean, double ell);

/// P1 point evaluation via the containing cell's barycentric
/// coordinates; points outside every cell raise OutOfDomain.
double eval_pressure(const FieldState& state, const Mesh& mesh,
                     const Point& x);
std::array<double, 3> eval_velocity(const FieldState& state, const Mesh& mesh,
                                    const Point& x);

struct LineSample {
  Point x{};
  double pressure = 0.0;
  std::array<double, 3> velocity{};
};

/// n >= 2 evenly spaced samples from a to b inclusive.
std::vector<LineSample> sample_line(const FieldState& state, const Mesh& mesh,
                                    const Point& a, const Point& b, int n);

/// Plain-text lookup table `coordinate value` (one pair per line, `#`
/// comments); leading comment lines are kept as provenance. Coordinates
/// must be in [0,1] and strictly increasing.
struct ReferenceTable {
  std::vector<double> coords;
  std::vector<double> values;
  std::string provenance;
};

ReferenceTable load_reference_table(const std::filesystem::path& path);

/// Root-mean-square deviation of samples (one per table row, same
/// order) from the table values.
double ghia_compare(std::span<const double> samples,
                    const ReferenceTable& table);

/// Legacy VTK ASCII unstructured grid: POINTS, CELLS (type 5 / 10),
/// POINT_DATA with SCALARS pressure and VECTORS velocity (zero-padded
/// z in 2D).
void write_vtk(const FieldState& state, const Mesh& mesh,
               const std::filesystem::path& path);

}  // namespace triform
