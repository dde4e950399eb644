#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "triform/mesh.hpp"
#include "triform/solve.hpp"

namespace triform {

/// One point probe: pressure and velocity are sampled there after every
/// accepted step and appended to probes.tsv.
struct ProbeSpec {
  std::string name;
  Point at{};
};

/// Per-step drag/lift output over one tagged boundary region.
struct ForceSpec {
  int region = -1;
  double v_mean = 1.0;  // reference speed in the 2/(v_mean^2 l) scale
  double length = 1.0;  // reference length in the same scale
};

struct OutputSpec {
  int vtk_every = 0;  // write a VTK snapshot every N steps; 0 = final only
  std::vector<ProbeSpec> probes;
  bool forces = false;
  ForceSpec force;
};

/// Exact reference attached to a case. `type` selects which of the
/// remaining fields are meaningful:
///   poiseuille_plane  dpdx
///   poiseuille_pipe   dpdz, transient, n_terms
///   ghia              u_table, v_table, lid_speed
///   shedding          diameter, v_ref, window
///   trig_mms          velocity_amplitude, pressure_amplitude
struct OracleSpec {
  std::string type;

  double dpdx = 0.0;

  double dpdz = 0.0;
  bool transient = false;
  int n_terms = 50;

  std::filesystem::path u_table;
  std::filesystem::path v_table;
  double lid_speed = 1.0;

  double diameter = 1.0;
  double v_ref = 1.0;
  double window = 0.5;  // trailing fraction of the force series analysed

  double velocity_amplitude = 1.0;
  double pressure_amplitude = 1.0;
};

/// A parsed case file. The JSON schema is documented in the README;
/// every field below maps to one key. Paths are stored resolved against
/// the directory containing the case file.
struct CaseConfig {
  std::string name;   // defaults to the file stem
  std::string kind;   // channel2d | pipe3d | cavity2d | cylinder2d | mms
  std::string notes;  // free text, ignored by the tooling

  // mesh source (exactly one of the three)
  std::string mesh_type;  // rect | pipe | msh
  int nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;
  RectTags rect_tags;
  int n_axial = 0, n_radial = 0;
  double length = 0.0, diameter = 0.0;
  PipeTags pipe_tags;
  std::filesystem::path msh_path;

  MaterialParams material;
  std::vector<BoundaryCondition> bcs;
  std::vector<std::string> bc_sources;  // expression text, parallel to bcs
  SolverConfig solver;
  OutputSpec output;
  OracleSpec oracle;

  std::filesystem::path base_dir;  // directory of the case file
};

/// Parses and schema-checks a case file. Unknown keys, missing required
/// keys, malformed expressions and out-of-range values raise
/// InvalidArgument naming the offending field; the file not being
/// readable raises Error.
CaseConfig load_case(const std::filesystem::path& path);

/// Builds the configured mesh. `level` applies `level` uniform halvings
/// of the generator spacing (space-refinement levels of a convergence
/// study); meshes loaded from MSH files only support level 0.
Mesh build_case_mesh(const CaseConfig& config, int level = 0);

/// Characteristic mesh spacing reported for convergence tables: grid
/// spacing for generated meshes, shortest cell edge for MSH input.
double case_mesh_spacing(const CaseConfig& config, int level = 0);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

/// Full static check of a case file: schema, mesh construction, region
/// existence, oracle fixtures, pressure-gauge solvability, plus
/// plausibility warnings. No solve is performed.
ValidationReport validate_case(const std::filesystem::path& path);

struct RunArtifacts {
  bool completed = false;
  bool reached_steady = false;
  std::string failure;
  nlohmann::ordered_json summary;  // what run_case wrote to summary.json
};

/// Runs the case: time-marches from rest, writing VTK snapshots, probe
/// and force time series, and summary.json into out_dir. On a
/// non-converged step the partial state is still written and
/// `completed` stays false.
RunArtifacts run_case(const CaseConfig& config,
                      const std::filesystem::path& out_dir);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;   // mesh spacing at this level
  double dt = 0.0;  // time step at this level
  std::int64_t dofs = 0;
  double l2_velocity = 0.0;
  double l2_pressure = 0.0;
  double centerline = 0.0;  // relative error at the case's center point
};

struct ConvergenceReport {
  std::string mode;  // space | time
  std::vector<ConvergenceRow> rows;
  bool monotone_velocity = true;
  bool monotone_pressure = true;
  bool monotone_centerline = true;
};

/// Refinement study against the case's exact reference: `space` halves
/// the mesh spacing per level at fixed dt, `time` halves dt on the
/// fixed mesh. Writes convergence.json (machine readable) and a plain
/// table to convergence.tsv in out_dir. Cases without an exact
/// reference raise InvalidArgument. Non-monotone sequences are only
/// flagged, never raised.
ConvergenceReport convergence_study(const CaseConfig& config, int levels,
                                    const std::string& mode,
                                    const std::filesystem::path& out_dir);

}  // namespace triform
