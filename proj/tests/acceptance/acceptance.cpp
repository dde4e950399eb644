// Acceptance checks for the solver: each criterion is a self-contained
// scenario run end to end against the bundled cases and fixtures. The
// binary prints exactly one "criterion N: PASS/FAIL" line on stdout;
// everything else (per-run diagnostics) goes to stderr so the verdict
// stays machine-greppable.
//
// Usage: acceptance --criterion N [--root PATH]
//   N    1..10
//   PATH repository root (defaults to "."), used to find cases/ and
//        fixtures/ and to place acceptance_out/ scratch directories.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "triform/case.hpp"
#include "triform/fem.hpp"
#include "triform/mesh.hpp"
#include "triform/oracles.hpp"
#include "triform/weakform.hpp"

namespace fs = std::filesystem;
using triform::CaseConfig;

namespace {

fs::path g_root = ".";

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& label) {
  fs::path out = g_root / "build" / "acceptance_out" / label;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {  // build/ may not exist when run standalone; fall back to /tmp
    out = fs::temp_directory_path() / "acceptance_out" / label;
    fs::create_directories(out);
  }
  return out;
}

CaseConfig load_bundled(const std::string& name) {
  return triform::load_case(g_root / "cases" / name);
}

double oracle_num(const triform::RunArtifacts& art, const char* key) {
  return art.summary.at("oracle").at(key).get<double>();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// --------------------------------------------------------------------
// 1. Jacobian exactness: random states and directions, analytic J*dP
//    against a central difference of the assembled residual.
// --------------------------------------------------------------------

Eigen::VectorXd csr_mult(const triform::SparseSystem& sys,
                         const Eigen::VectorXd& x) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(sys.n);
  for (std::int64_t row = 0; row < sys.n; ++row)
    for (std::int64_t k = sys.row_ptr[row]; k < sys.row_ptr[row + 1]; ++k)
      y[row] += sys.values[k] * x[sys.col_idx[k]];
  return y;
}

double jacobian_check(const triform::Mesh& mesh, int pairs, std::uint64_t seed) {
  const triform::DofMap dofmap = triform::build_dofmap(mesh);
  const triform::QuadratureRule quad = triform::quadrature(mesh.dim, 2);
  triform::MaterialParams params;
  params.rho = 1.2;
  params.mu = 0.7;
  params.lam = 3.0;
  const double dt = 0.37;
  const double time = 1.3;
  const std::int64_t n = dofmap.total_dofs();

  triform::SparseSystem sys = triform::build_sparse_system(mesh, dofmap);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random_vec = [&](Eigen::VectorXd& v) {
    v.resize(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = uni(rng);
  };

  double worst = 0.0;
  const double eps = 1e-4;  // residual is quadratic in the state, so the
                            // central difference is exact up to roundoff
  Eigen::VectorXd state, prev, dir, rp, rm;
  for (int k = 0; k < pairs; ++k) {
    random_vec(state);
    random_vec(prev);
    random_vec(dir);

    triform::assemble_system(mesh, dofmap, quad, state, prev, params, dt,
                             time, sys, true);
    const Eigen::VectorXd jd = csr_mult(sys, dir);

    triform::assemble_system(mesh, dofmap, quad, state + eps * dir, prev,
                             params, dt, time, sys, false);
    rp = sys.residual;
    triform::assemble_system(mesh, dofmap, quad, state - eps * dir, prev,
                             params, dt, time, sys, false);
    rm = sys.residual;

    const Eigen::VectorXd fd = (rp - rm) / (2.0 * eps);
    const double rel = (jd - fd).norm() / std::max(jd.norm(), 1e-300);
    worst = std::max(worst, rel);
  }
  return worst;
}

Verdict criterion_1() {
  const double t0 = now_seconds();
  const triform::Mesh mesh2d = triform::gen_rect(3, 3, 1.0, 1.0);
  const triform::Mesh mesh3d = triform::gen_pipe(2, 2, 1.0, 0.8);
  const double worst2d = jacobian_check(mesh2d, 100, 0x5eed2dULL);
  const double worst3d = jacobian_check(mesh3d, 100, 0x5eed3dULL);
  const double elapsed = now_seconds() - t0;

  Verdict v;
  v.pass = worst2d <= 1e-6 && worst3d <= 1e-6 && elapsed < 10.0;
  v.detail = "100 random (state, direction) pairs per dimension; max rel dev "
             "2D " + fmt(worst2d) + ", 3D " + fmt(worst3d) +
             " (tol 1e-6); " + fmt(elapsed) + " s (budget 10 s)";
  return v;
}

// --------------------------------------------------------------------
// 2. Plane Poiseuille convergence on three meshes.
// --------------------------------------------------------------------

Verdict criterion_2() {
  const double t0 = now_seconds();
  CaseConfig cfg = load_bundled("channel2d.json");
  const triform::ConvergenceReport rep =
      triform::convergence_study(cfg, 3, "space", scratch_dir("c2_channel"));
  const double elapsed = now_seconds() - t0;

  const auto& r = rep.rows;
  const double ratio01 = r[0].l2_velocity / r[1].l2_velocity;
  const double ratio12 = r[1].l2_velocity / r[2].l2_velocity;
  const double centerline = r.back().centerline;

  Verdict v;
  v.pass = centerline <= 0.01 && ratio01 >= 2.5 && ratio12 >= 2.5 &&
           elapsed < 120.0;
  v.detail = "centerline rel err " + fmt(centerline) +
             " (tol 0.01) on finest of 3 meshes; L2 velocity contraction " +
             fmt(ratio01) + ", " + fmt(ratio12) + " per halving (need >= 2.5); " +
             fmt(elapsed) + " s (budget 120 s)";
  return v;
}

// --------------------------------------------------------------------
// 3. Hagen-Poiseuille pipe at Re ~ 313: parabolic fit on the coarse
//    mesh, error decrease on one refinement.
// --------------------------------------------------------------------

Verdict criterion_3() {
  const double t0 = now_seconds();
  const triform::RunArtifacts coarse =
      triform::run_case(load_bundled("pipe3d_re313.json"), scratch_dir("c3_coarse"));
  if (!coarse.completed)
    return {false, "coarse pipe run failed: " + coarse.failure};
  const double r2 = oracle_num(coarse, "profile_r2");
  const double err_coarse = oracle_num(coarse, "centerline_rel_error");

  const triform::RunArtifacts fine =
      triform::run_case(load_bundled("pipe3d_re313_fine.json"), scratch_dir("c3_fine"));
  if (!fine.completed) return {false, "fine pipe run failed: " + fine.failure};
  const double err_fine = oracle_num(fine, "centerline_rel_error");
  const double elapsed = now_seconds() - t0;

  Verdict v;
  v.pass = r2 >= 0.99 && err_coarse <= 0.06 && err_fine < err_coarse &&
           elapsed <= 1800.0;
  v.detail = "coarse: R^2 " + fmt(r2) + " (need >= 0.99), centerline rel err " +
             fmt(err_coarse) + " (tol 0.06); refined: " + fmt(err_fine) +
             " (must decrease); " + fmt(elapsed) + " s (budget 1800 s)";
  return v;
}

// --------------------------------------------------------------------
// 4. Transient pipe start-up: dt refinement at t = 2 s, then the
//    dt = 0.25 s march to t = 10 s against the steady centerline.
// --------------------------------------------------------------------

Verdict criterion_4() {
  CaseConfig cfg = load_bundled("pipe3d_startup.json");
  const triform::ConvergenceReport rep =
      triform::convergence_study(cfg, 3, "time", scratch_dir("c4_study"));
  const auto& r = rep.rows;
  const bool monotone = r[0].l2_velocity > r[1].l2_velocity &&
                        r[1].l2_velocity > r[2].l2_velocity;

  CaseConfig long_cfg = load_bundled("pipe3d_startup.json");
  long_cfg.solver.dt = 0.25;
  long_cfg.solver.t_end = 10.0;
  const triform::RunArtifacts art =
      triform::run_case(long_cfg, scratch_dir("c4_long"));
  if (!art.completed) return {false, "t = 10 s march failed: " + art.failure};

  // Steady Hagen-Poiseuille centerline for this pipe and gradient.
  const double vmax = 98.91846268164586;
  const double v10 = oracle_num(art, "centerline_value");
  const double rel = std::abs(v10 - vmax) / vmax;

  Verdict v;
  v.pass = monotone && rel <= 0.02;
  v.detail = "L2 errors at t = 2 s for dt = 1, 0.5, 0.25: " +
             fmt(r[0].l2_velocity) + " > " + fmt(r[1].l2_velocity) + " > " +
             fmt(r[2].l2_velocity) + (monotone ? " (monotone)" : " (NOT monotone)") +
             "; centerline at t = 10 s " + fmt(v10) + " vs steady " + fmt(vmax) +
             ", rel dev " + fmt(rel) + " (tol 0.02)";
  return v;
}

// --------------------------------------------------------------------
// 5. Bessel oracle internals.
// --------------------------------------------------------------------

Verdict criterion_5() {
  const double t0 = now_seconds();
  const double root = triform::j0_roots(1).roots[0];
  const double root_ref = 2.404825557695773;
  const double root_err = std::abs(root - root_ref);

  triform::PipeSpec spec;
  spec.a = 3.175;
  spec.L = 25.4;
  spec.dpdz = -0.03931372597311635;
  spec.params.rho = 0.0009982;
  spec.params.mu = 0.0010016;
  const triform::BesselTable table = triform::j0_roots(50);

  double worst = 0.0;
  for (double frac : {0.0, 0.3, 0.6, 0.9}) {
    const double r = frac * spec.a;
    const double vt = triform::pipe_transient(r, 1e9, spec, table);
    const double vs = triform::pipe_steady(r, spec);
    worst = std::max(worst, std::abs(vt - vs));
  }
  const double elapsed = now_seconds() - t0;

  Verdict v;
  v.pass = root_err <= 1e-10 && worst <= 1e-8 && elapsed < 1.0;
  v.detail = "first J0 root dev " + fmt(root_err) + " (tol 1e-10); transient vs "
             "steady at large time, max dev " + fmt(worst) + " mm/s (tol 1e-8); " +
             fmt(elapsed) + " s (budget 1 s)";
  return v;
}

// --------------------------------------------------------------------
// 6. Lid-driven cavity against the Ghia tables. The reported number is
//    the RMS of the normalized centerline velocity deviations over both
//    tabulated centerlines (u on the vertical, v on the horizontal).
// --------------------------------------------------------------------

Verdict criterion_6() {
  struct Row {
    const char* file;
    const char* label;
    double tol;
  };
  const std::array<Row, 3> rows = {{{"cavity2d_re100.json", "Re=100", 0.03},
                                    {"cavity2d_re400.json", "Re=400", 0.05},
                                    {"cavity2d_re1000.json", "Re=1000", 0.05}}};
  bool pass = true;
  std::string detail;
  for (const Row& row : rows) {
    const triform::RunArtifacts art = triform::run_case(
        load_bundled(row.file), scratch_dir(std::string("c6_") + row.label));
    if (!art.completed) return {false, std::string(row.label) + " run failed: " + art.failure};
    const double rms_u = oracle_num(art, "ghia_rms_u");
    const double rms_v = oracle_num(art, "ghia_rms_v");
    const double rms = std::sqrt(0.5 * (rms_u * rms_u + rms_v * rms_v));
    pass = pass && rms <= row.tol;
    if (!detail.empty()) detail += "; ";
    detail += std::string(row.label) + " rms " + fmt(rms) + " (u " + fmt(rms_u) +
              ", v " + fmt(rms_v) + ", tol " + fmt(row.tol) + ")";
    std::cerr << "[c6] " << row.label << " rms_u " << rms_u << " rms_v "
              << rms_v << " combined " << rms << "\n";
  }
  return {pass, detail};
}

// --------------------------------------------------------------------
// 7. Karman vortex street: sustained periodic lift on the steady-inflow
//    case, plus a qualitative landmark comparison for the modulated
//    benchmark inflow.
// --------------------------------------------------------------------

struct Landmark {
  double t = 0.0;
  double value = 0.0;
};

Landmark read_landmark(const fs::path& file, double t_scale) {
  std::ifstream in(file);
  Landmark lm;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    row >> lm.t >> lm.value;
    lm.t *= t_scale;
  }
  return lm;
}

Landmark series_max(const fs::path& forces, int column) {
  std::ifstream in(forces);
  Landmark lm;
  lm.value = -1e300;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double t, cd, cl;
    row >> t >> cd >> cl;
    const double val = column == 1 ? cd : cl;
    if (val > lm.value) lm = {t, val};
  }
  return lm;
}

Verdict criterion_7() {
  const triform::RunArtifacts art = triform::run_case(
      load_bundled("cylinder2d_shedding.json"), scratch_dir("c7_shedding"));
  if (!art.completed) return {false, "shedding run failed: " + art.failure};

  const double amplitude = oracle_num(art, "amplitude");
  const double n_periods = oracle_num(art, "n_periods");
  const double period_dev = oracle_num(art, "max_period_dev");
  const double cd_min = oracle_num(art, "c_D_min");
  const double cd_max = oracle_num(art, "c_D_max");
  const double strouhal = oracle_num(art, "strouhal");
  const double div_norm = art.summary.at("div_norm").get<double>();
  const double v_max = art.summary.at("v_max").get<double>();
  const double div_bound = 1e-2 * (v_max / 0.1);

  const bool shedding_ok = amplitude > 0.1 && n_periods >= 5 &&
                           period_dev <= 0.05 && cd_min > 0.0 &&
                           std::isfinite(cd_max) && div_norm < div_bound;

  std::cerr << "[c7] amplitude " << amplitude << " periods " << n_periods
            << " period dev " << period_dev << " St " << strouhal
            << " c_D in [" << cd_min << ", " << cd_max << "] div " << div_norm
            << " (bound " << div_bound << ")\n";

  // Qualitative landmark comparison against the published benchmark
  // series; the inflow modulation case is re-run with a coarser step to
  // keep the check affordable, so no numeric tolerance is asserted.
  CaseConfig dfg = load_bundled("cylinder2d.json");
  dfg.solver.dt = 0.0025;
  const triform::RunArtifacts bench =
      triform::run_case(dfg, scratch_dir("c7_benchmark"));
  std::string landmark_note = "benchmark comparison unavailable";
  if (bench.completed) {
    const fs::path forces = scratch_dir("c7_benchmark") / "forces.tsv";
    const Landmark cd = series_max(forces, 1);
    const Landmark cl = series_max(forces, 2);
    const Landmark cd_ref =
        read_landmark(g_root / "fixtures" / "dfg2d3_cd_max.txt", 8.0);
    const Landmark cl_ref =
        read_landmark(g_root / "fixtures" / "dfg2d3_cl_max.txt", 8.0);
    std::ostringstream os;
    os.precision(4);
    os << "benchmark landmarks (dt = 1/400): c_D max " << cd.value << " at t = "
       << cd.t << " s vs reference " << cd_ref.value << " at " << cd_ref.t
       << " s; c_L max " << cl.value << " at t = " << cl.t
       << " s vs reference " << cl_ref.value << " at " << cl_ref.t << " s";
    landmark_note = os.str();
  } else {
    landmark_note += " (" + bench.failure + ")";
  }
  std::cerr << "[c7] " << landmark_note << "\n";

  Verdict v;
  v.pass = shedding_ok;
  v.detail = "c_L amplitude " + fmt(amplitude) + " (need > 0.1), " +
             fmt(n_periods) + " periods with max period dev " + fmt(period_dev) +
             " (need >= 5 stable to 0.05), c_D in [" + fmt(cd_min) + ", " +
             fmt(cd_max) + "] (bounded positive), div norm " + fmt(div_norm) +
             " vs bound " + fmt(div_bound) + "; " + landmark_note;
  return v;
}

// --------------------------------------------------------------------
// 8. Raising the volume viscosity must not worsen incompressibility.
// --------------------------------------------------------------------

Verdict criterion_8() {
  CaseConfig cfg = load_bundled("cavity2d_re100.json");
  const triform::RunArtifacts base = triform::run_case(cfg, scratch_dir("c8_lambda"));
  if (!base.completed) return {false, "base run failed: " + base.failure};
  const double div_base = base.summary.at("div_norm").get<double>();

  cfg.material.lam *= 10.0;
  const triform::RunArtifacts big = triform::run_case(cfg, scratch_dir("c8_lambda10"));
  if (!big.completed) return {false, "10x lambda run failed: " + big.failure};
  const double div_big = big.summary.at("div_norm").get<double>();

  Verdict v;
  v.pass = div_big <= div_base;
  v.detail = "div norm " + fmt(div_base) + " at lambda, " + fmt(div_big) +
             " at 10x lambda (must not increase)";
  return v;
}

// --------------------------------------------------------------------
// 9. Manufactured solution rates.
// --------------------------------------------------------------------

Verdict criterion_9() {
  CaseConfig cfg = load_bundled("mms2d.json");
  const triform::ConvergenceReport rep =
      triform::convergence_study(cfg, 3, "space", scratch_dir("c9_mms"));
  const auto& r = rep.rows;
  const double ratio01 = r[0].l2_velocity / r[1].l2_velocity;
  const double ratio12 = r[1].l2_velocity / r[2].l2_velocity;
  const bool p_monotone = r[0].l2_pressure > r[1].l2_pressure &&
                          r[1].l2_pressure > r[2].l2_pressure;

  Verdict v;
  v.pass = ratio01 >= 2.5 && ratio12 >= 2.5 && p_monotone;
  v.detail = "L2 velocity contraction " + fmt(ratio01) + ", " + fmt(ratio12) +
             " per halving (need >= 2.5); L2 pressure " + fmt(r[0].l2_pressure) +
             " > " + fmt(r[1].l2_pressure) + " > " + fmt(r[2].l2_pressure) +
             (p_monotone ? " (monotone)" : " (NOT monotone)");
  return v;
}

// --------------------------------------------------------------------
// 10. No checkerboard mode: the discrete pressure-gradient energy stays
//     finite and decreases under mesh refinement at fixed Re.
// --------------------------------------------------------------------

Verdict criterion_10() {
  CaseConfig cfg = load_bundled("cavity2d_re100.json");
  const triform::RunArtifacts coarse = triform::run_case(cfg, scratch_dir("c10_h64"));
  if (!coarse.completed) return {false, "64x64 run failed: " + coarse.failure};
  const double e64 = coarse.summary.at("pressure_gradient_energy").get<double>();

  cfg.nx = 128;
  cfg.ny = 128;
  const triform::RunArtifacts fine = triform::run_case(cfg, scratch_dir("c10_h128"));
  if (!fine.completed) return {false, "128x128 run failed: " + fine.failure};
  const double e128 = fine.summary.at("pressure_gradient_energy").get<double>();

  Verdict v;
  v.pass = std::isfinite(e64) && std::isfinite(e128) && e128 < e64;
  v.detail = "sum V_c |grad p|^2 = " + fmt(e64) + " on 64x64, " + fmt(e128) +
             " on 128x128 (must be finite and decrease)";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int criterion = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      criterion = std::atoi(argv[++i]);
    } else if (arg == "--root" && i + 1 < argc) {
      g_root = argv[++i];
    } else {
      std::cerr << "usage: acceptance --criterion N [--root PATH]\n";
      return 2;
    }
  }
  if (criterion < 1 || criterion > 10) {
    std::cerr << "--criterion must be 1..10\n";
    return 2;
  }

  Verdict v;
  try {
    switch (criterion) {
      case 1: v = criterion_1(); break;
      case 2: v = criterion_2(); break;
      case 3: v = criterion_3(); break;
      case 4: v = criterion_4(); break;
      case 5: v = criterion_5(); break;
      case 6: v = criterion_6(); break;
      case 7: v = criterion_7(); break;
      case 8: v = criterion_8(); break;
      case 9: v = criterion_9(); break;
      case 10: v = criterion_10(); break;
    }
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }

  std::cout << "criterion " << criterion << ": " << (v.pass ? "PASS" : "FAIL")
            << " - " << v.detail << std::endl;
  return v.pass ? 0 : 1;
}
