#pragma once

#include <vector>

#include "triform/weakform.hpp"

namespace triform {

/// Closed-form references for the pipe benchmarks and the special
/// functions they need. All functions here are pure and thread-safe.

/// Bessel function of the first kind, order 0 or 1, for x >= 0.
/// Power series for small arguments, Hankel asymptotic expansion for
/// large ones; absolute error <= 1e-10 on [0, 200].
double bessel_j(int order, double x);

/// The first n positive roots of J0, each bracketed from the ~pi
/// asymptotic spacing and bisected to 1e-13 interval width.
struct BesselTable {
  std::vector<double> roots;
};
BesselTable j0_roots(int n);

/// Circular pipe of radius a and length L driven by a constant axial
/// pressure gradient dpdz (negative drives flow toward +z).
struct PipeSpec {
  double a = 0.0;
  double L = 0.0;
  double dpdz = 0.0;
  MaterialParams params;
};

/// Steady Hagen-Poiseuille profile v_z(r) = -dpdz*a^2/(4 mu)*(1-r^2/a^2).
/// r outside [0, a] (beyond roundoff) -> OutOfDomain.
double pipe_steady(double r, const PipeSpec& spec);

/// Start-up flow from rest under a suddenly applied gradient:
///   v_z(r,t) = -dpdz*a^2/(4 mu) * [1 - (r/a)^2
///              - sum_n 8 J0(L_n r/a) / (L_n^3 J1(L_n)) exp(-L_n^2 tau)]
/// with tau = t*mu/(rho*a^2) and L_n the roots in `table`.
double pipe_transient(double r, double t, const PipeSpec& spec,
                      const BesselTable& table);

/// Plane channel of height H (walls at y = 0 and y = H):
///   v_x(y) = -dpdx*H^2/(8 mu) * (1 - (2y/H - 1)^2).
double plane_poiseuille(double y, double H, double dpdx, double mu);

/// Pipe Reynolds number from the centerline velocity:
///   Re = vz_max * D * rho / (2 mu).
double reynolds_pipe(double vz_max, double D, const MaterialParams& params);

}  // namespace triform
