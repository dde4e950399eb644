#include "triform/weakform.hpp"

#include <cmath>
#include <thread>
#include <vector>

#include "triform/errors.hpp"

namespace triform {

void check_material(const MaterialParams& params) {
  if (!(params.rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(params.mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (!(params.lam >= 0.0)) throw InvalidArgument("lam must be non-negative");
}

std::array<std::array<double, 3>, 3> deviatoric_stress(
    const std::array<std::array<double, 3>, 3>& grad_v,
    const MaterialParams& params, int dim) {
  std::array<std::array<double, 3>, 3> tau{};
  double div = 0.0;
  for (int i = 0; i < dim; ++i) div += grad_v[i][i];
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      tau[i][j] = params.mu * (grad_v[i][j] + grad_v[j][i]) +
                  (i == j ? params.lam * div : 0.0);
  return tau;
}

namespace {

template <int DIM>
LocalKernelOutput kernel(const CellGeometry& geom,
                         const std::array<Point, 4>& coords,
                         const QuadratureRule& quad,
                         std::span<const double> P_e,
                         std::span<const double> P0_e,
                         const MaterialParams& params, double dt, double time,
                         bool want_jacobian) {
  constexpr int NN = DIM + 1;   // nodes per cell
  constexpr int NF = DIM + 1;   // fields per node (p, v_1..v_DIM)
  constexpr int NL = NN * NF;

  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");

  LocalKernelOutput out;
  out.size = NL;

  const double rho = params.rho;
  const double dt_rho = dt / rho;

  // local coefficients
  double p[NN], v[NN][DIM], v0[NN][DIM];
  for (int a = 0; a < NN; ++a) {
    p[a] = P_e[a * NF];
    for (int j = 0; j < DIM; ++j) {
      v[a][j] = P_e[a * NF + 1 + j];
      v0[a][j] = P0_e[a * NF + 1 + j];
    }
  }

  // cell-constant derivatives (P1)
  const auto& G = geom.grad_phi;
  std::array<std::array<double, 3>, 3> grad_v{};  // [component][derivative]
  double grad_p[DIM] = {};
  for (int a = 0; a < NN; ++a)
    for (int i = 0; i < DIM; ++i) {
      grad_p[i] += p[a] * G[a][i];
      for (int j = 0; j < DIM; ++j) grad_v[j][i] += v[a][j] * G[a][i];
    }
  double div_v = 0.0;
  for (int i = 0; i < DIM; ++i) div_v += grad_v[i][i];
  const auto tau = deviatoric_stress(grad_v, params, DIM);
  // div(tau) vanishes identically for P1 velocity (second derivatives of
  // linear shape functions are zero); kept explicit so the third form
  // reads like the strong momentum residual it tests.
  const double div_tau[3] = {0.0, 0.0, 0.0};

  const double jac = geom.volume / quad.reference_measure();

  for (std::size_t q = 0; q < quad.points.size(); ++q) {
    const double w = quad.weights[q] * jac;
    const double* phi = quad.points[q].data();

    Point xq{0.0, 0.0, 0.0};
    for (int a = 0; a < NN; ++a)
      for (int c = 0; c < 3; ++c) xq[c] += phi[a] * coords[a][c];

    double vq[DIM] = {}, v0q[DIM] = {};
    for (int a = 0; a < NN; ++a)
      for (int j = 0; j < DIM; ++j) {
        vq[j] += v[a][j] * phi[a];
        v0q[j] += v0[a][j] * phi[a];
      }
    std::array<double, 3> gq{0.0, 0.0, 0.0};
    if (params.g) gq = params.g(xq, time);

    // (v_i v_j)_,i expanded by the product rule
    double conv[DIM];
    for (int j = 0; j < DIM; ++j) {
      conv[j] = div_v * vq[j];
      for (int i = 0; i < DIM; ++i) conv[j] += vq[i] * grad_v[j][i];
    }

    for (int a = 0; a < NN; ++a) {
      // mass tested by dp, plus momentum tested by grad dp
      double rp = div_v * phi[a];
      for (int j = 0; j < DIM; ++j)
        rp += ((vq[j] - v0q[j]) - dt * gq[j] + dt * conv[j] +
               dt_rho * (grad_p[j] - div_tau[j])) *
              G[a][j];
      out.residual[a * NF] += w * rp;

      // momentum tested by dv (pressure gradient not integrated by
      // parts; viscous term is, with no boundary integral)
      for (int j = 0; j < DIM; ++j) {
        double rv = (rho / dt * (vq[j] - v0q[j]) - rho * gq[j] +
                     rho * conv[j] + grad_p[j]) *
                    phi[a];
        for (int i = 0; i < DIM; ++i) rv += tau[i][j] * G[a][i];
        out.residual[a * NF + 1 + j] += w * rv;
      }
    }

    if (!want_jacobian) continue;

    for (int b = 0; b < NN; ++b) {
      const double phib = phi[b];
      double v_dot_Gb = 0.0;
      for (int i = 0; i < DIM; ++i) v_dot_Gb += vq[i] * G[b][i];

      for (int a = 0; a < NN; ++a) {
        double GaGb = 0.0;
        for (int i = 0; i < DIM; ++i) GaGb += G[a][i] * G[b][i];

        // pressure column
        out.jacobian[(a * NF) * NL + b * NF] += w * dt_rho * GaGb;
        for (int j = 0; j < DIM; ++j)
          out.jacobian[(a * NF + 1 + j) * NL + b * NF] += w * G[b][j] * phi[a];

        // velocity columns
        for (int n = 0; n < DIM; ++n) {
          const int col = b * NF + 1 + n;

          double dconv[DIM];
          for (int j = 0; j < DIM; ++j) {
            dconv[j] = G[b][n] * vq[j] + phib * grad_v[j][n];
            if (j == n) dconv[j] += div_v * phib + v_dot_Gb;
          }

          double jp = G[b][n] * phi[a] + phib * G[a][n];
          for (int j = 0; j < DIM; ++j) jp += dt * dconv[j] * G[a][j];
          out.jacobian[(a * NF) * NL + col] += w * jp;

          for (int m = 0; m < DIM; ++m) {
            double jv = rho * dconv[m] * phi[a] +
                        params.lam * G[b][n] * G[a][m] +
                        params.mu * G[b][m] * G[a][n];
            if (m == n)
              jv += rho / dt * phib * phi[a] + params.mu * GaGb;
            out.jacobian[(a * NF + 1 + m) * NL + col] += w * jv;
          }
        }
      }
    }
  }
  return out;
}

LocalKernelOutput dispatch(int dim, const CellGeometry& geom,
                           const std::array<Point, 4>& coords,
                           const QuadratureRule& quad,
                           std::span<const double> P_e,
                           std::span<const double> P0_e,
                           const MaterialParams& params, double dt,
                           double time, bool want_jacobian) {
  if (dim == 2)
    return kernel<2>(geom, coords, quad, P_e, P0_e, params, dt, time,
                     want_jacobian);
  if (dim == 3)
    return kernel<3>(geom, coords, quad, P_e, P0_e, params, dt, time,
                     want_jacobian);
  throw InvalidArgument("element kernel: dim must be 2 or 3");
}

}  // namespace

LocalKernelOutput element_residual(int dim, const CellGeometry& geom,
                                   const std::array<Point, 4>& coords,
                                   const QuadratureRule& quad,
                                   std::span<const double> P_e,
                                   std::span<const double> P0_e,
                                   const MaterialParams& params, double dt,
                                   double time) {
  return dispatch(dim, geom, coords, quad, P_e, P0_e, params, dt, time, false);
}

LocalKernelOutput element_jacobian(int dim, const CellGeometry& geom,
                                   const std::array<Point, 4>& coords,
                                   const QuadratureRule& quad,
                                   std::span<const double> P_e,
                                   std::span<const double> P0_e,
                                   const MaterialParams& params, double dt,
                                   double time) {
  return dispatch(dim, geom, coords, quad, P_e, P0_e, params, dt, time, true);
}

void assemble_system(const Mesh& mesh, const DofMap& dofmap,
                     const QuadratureRule& quad, const Eigen::VectorXd& state,
                     const Eigen::VectorXd& prev, const MaterialParams& params,
                     double dt, double time, SparseSystem& sys,
                     bool want_jacobian, int n_threads) {
  const int nf = dofmap.n_fields();
  const int npc = mesh.nodes_per_cell();
  const int nl = npc * nf;
  sys.zero();

  const auto order = assembly_order(mesh);

  auto gather = [&](std::size_t c, std::array<double, 16>& pe,
                    std::array<double, 16>& p0e, std::array<Point, 4>& coords,
                    std::array<std::int64_t, 16>& dofs) {
    auto nn = mesh.cell_nodes(c);
    for (int a = 0; a < npc; ++a) {
      coords[a] = mesh.nodes[nn[a]];
      for (int f = 0; f < nf; ++f) {
        const std::int64_t d = dofmap.dof(nn[a], f);
        dofs[a * nf + f] = d;
        pe[a * nf + f] = state[d];
        p0e[a * nf + f] = prev[d];
      }
    }
  };

  auto compute = [&](std::size_t c) {
    std::array<double, 16> pe{}, p0e{};
    std::array<Point, 4> coords{};
    std::array<std::int64_t, 16> dofs{};
    gather(c, pe, p0e, coords, dofs);
    const CellGeometry geom = cell_geometry(mesh, c);
    return dispatch(mesh.dim, geom, coords, quad,
                    std::span<const double>(pe.data(), nl),
                    std::span<const double>(p0e.data(), nl), params, dt, time,
                    want_jacobian);
  };

  auto scatter = [&](std::size_t c, const LocalKernelOutput& loc) {
    std::array<double, 16> pe{}, p0e{};
    std::array<Point, 4> coords{};
    std::array<std::int64_t, 16> dofs{};
    gather(c, pe, p0e, coords, dofs);
    scatter_add(sys, std::span<const std::int64_t>(dofs.data(), nl),
                want_jacobian
                    ? std::span<const double>(loc.jacobian.data(), nl * nl)
                    : std::span<const double>{},
                std::span<const double>(loc.residual.data(), nl));
  };

  if (n_threads <= 1) {
    for (std::size_t c : order) scatter(c, compute(c));
    return;
  }

  // parallel kernel evaluation in chunks, serial scatter in canonical
  // order: bitwise identical to the single-threaded result
  const std::size_t chunk = 4096;
  std::vector<LocalKernelOutput> buf;
  for (std::size_t begin = 0; begin < order.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, order.size());
    buf.assign(end - begin, {});
    std::vector<std::thread> pool;
    const std::size_t per = (end - begin + n_threads - 1) / n_threads;
    for (int ti = 0; ti < n_threads; ++ti) {
      const std::size_t lo = begin + ti * per;
      const std::size_t hi = std::min(lo + per, end);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi]() {
        for (std::size_t k = lo; k < hi; ++k) buf[k - begin] = compute(order[k]);
      });
    }
    for (auto& th : pool) th.join();
    for (std::size_t k = begin; k < end; ++k) scatter(order[k], buf[k - begin]);
  }
}

BodyForce mms_forcing(const ManufacturedSolution& ms,
                      const MaterialParams& params) {
  check_material(params);
  const int dim = ms.dim;

  // reject fields that are not divergence-free (sampled over the unit
  // cube and a few times; the mass form cannot be satisfied otherwise)
  double scale = 0.0, worst = 0.0;
  const int n = 5;
  for (double t : {0.0, 0.4, 1.0})
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        for (int k = 0; k <= (dim == 3 ? n : 0); ++k) {
          Point x{static_cast<double>(i) / n, static_cast<double>(j) / n,
                  static_cast<double>(k) / n};
          auto gv = ms.velocity_gradient(x, t);
          double div = 0.0;
          for (int c = 0; c < dim; ++c) {
            div += gv[c][c];
            for (int d = 0; d < dim; ++d)
              scale = std::max(scale, std::abs(gv[c][d]));
          }
          worst = std::max(worst, std::abs(div));
        }
  if (worst > 1e-8 * std::max(1.0, scale))
    throw InvalidArgument("manufactured velocity is not divergence-free");

  const double nu = params.mu / params.rho;
  const double inv_rho = 1.0 / params.rho;
  return [ms, nu, inv_rho, dim](const Point& x, double t) {
    auto v = ms.velocity(x, t);
    auto gv = ms.velocity_gradient(x, t);
    auto vt = ms.velocity_dt(x, t);
    auto lv = ms.velocity_laplacian(x, t);
    auto gp = ms.pressure_gradient(x, t);
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (int j = 0; j < dim; ++j) {
      g[j] = vt[j] + inv_rho * gp[j] - nu * lv[j];
      for (int i = 0; i < dim; ++i) g[j] += v[i] * gv[j][i];
    }
    return g;
  };
}

ManufacturedSolution trig_mms_2d(double velocity_amplitude,
                                 double pressure_amplitude) {
  const double A = velocity_amplitude;
  const double B = pressure_amplitude;
  const double pi = M_PI;
  ManufacturedSolution ms;
  ms.dim = 2;
  ms.velocity = [A, pi](const Point& x, double) {
    return std::array<double, 3>{A * std::sin(pi * x[0]) * std::cos(pi * x[1]),
                                 -A * std::cos(pi * x[0]) * std::sin(pi * x[1]),
                                 0.0};
  };
  ms.velocity_gradient = [A, pi](const Point& x, double) {
    std::array<std::array<double, 3>, 3> g{};
    g[0][0] = A * pi * std::cos(pi * x[0]) * std::cos(pi * x[1]);
    g[0][1] = -A * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    g[1][0] = A * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    g[1][1] = -A * pi * std::cos(pi * x[0]) * std::cos(pi * x[1]);
    return g;
  };
  ms.velocity_dt = [](const Point&, double) {
    return std::array<double, 3>{0.0, 0.0, 0.0};
  };
  ms.velocity_laplacian = [A, pi](const Point& x, double) {
    return std::array<double, 3>{
        -2 * pi * pi * A * std::sin(pi * x[0]) * std::cos(pi * x[1]),
        2 * pi * pi * A * std::cos(pi * x[0]) * std::sin(pi * x[1]), 0.0};
  };
  ms.pressure = [B, pi](const Point& x, double) {
    return B * std::cos(pi * x[0]) * std::cos(pi * x[1]);
  };
  ms.pressure_gradient = [B, pi](const Point& x, double) {
    return std::array<double, 3>{-B * pi * std::sin(pi * x[0]) * std::cos(pi * x[1]),
                                 -B * pi * std::cos(pi * x[0]) * std::sin(pi * x[1]),
                                 0.0};
  };
  return ms;
}

}  // namespace triform
