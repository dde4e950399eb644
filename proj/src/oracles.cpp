#include "triform/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "triform/errors.hpp"

namespace triform {

namespace {

// ascending power series; converges to full precision for x below the
// crossover (largest term there is ~1e5, so cancellation stays ~1e-11)
double bessel_series(int order, double x) {
  const double q = 0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int m = 1; m < 200; ++m) {
    term *= -q / (m * static_cast<double>(m + order));
    sum += term;
    if (std::abs(term) <= 1e-18 * (std::abs(sum) + 1.0)) break;
  }
  return sum;
}

// Hankel expansion J_nu(x) ~ sqrt(2/(pi x)) (P cos(chi) - Q sin(chi)),
// chi = x - (nu/2 + 1/4) pi, with
//   P = sum (-1)^k c_{2k} x^{-2k},  Q = sum (-1)^k c_{2k+1} x^{-2k-1},
//   c_m = prod_{j=1..m} (4 nu^2 - (2j-1)^2) / (m! 8^m),
// truncated at the smallest term
double bessel_asymptotic(int order, double x) {
  const double mu = 4.0 * order * order;
  double p = 1.0, q = 0.0;
  double c = 1.0;       // c_m / x^m, running
  double last = 1.0;
  for (int m = 1; m <= 40; ++m) {
    const double f = 2.0 * m - 1.0;
    c *= (mu - f * f) / (8.0 * m * x);
    if (std::abs(c) >= last) break;  // asymptotic tail starts growing
    last = std::abs(c);
    const double sgn = ((m / 2) % 2 == 0) ? 1.0 : -1.0;
    if (m % 2 == 1)
      q += sgn * c;
    else
      p += sgn * c;
    if (last < 1e-18) break;
  }
  const double chi = x - (0.5 * order + 0.25) * M_PI;
  return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j(int order, double x) {
  if (order != 0 && order != 1)
    throw InvalidArgument("bessel_j: order must be 0 or 1");
  if (x < 0.0) throw InvalidArgument("bessel_j: x must be non-negative");
  return x <= 15.0 ? bessel_series(order, x) : bessel_asymptotic(order, x);
}

BesselTable j0_roots(int n) {
  if (n < 1) throw InvalidArgument("j0_roots: need at least one root");
  BesselTable table;
  table.roots.reserve(n);
  for (int k = 1; k <= n; ++k) {
    // McMahon estimate (k - 1/4) pi is within ~0.05 of the true root;
    // adjacent roots are ~pi apart, so +-0.5 always brackets exactly one
    const double guess = (k - 0.25) * M_PI;
    double lo = guess - 0.5, hi = guess + 0.5;
    double flo = bessel_j(0, lo);
    if (flo * bessel_j(0, hi) > 0.0)
      throw Error("j0_roots: bracketing failed");  // unreachable by design
    while (hi - lo > 1e-13) {
      const double mid = 0.5 * (lo + hi);
      const double fm = bessel_j(0, mid);
      if (flo * fm <= 0.0) {
        hi = mid;
      } else {
        lo = mid;
        flo = fm;
      }
    }
    table.roots.push_back(0.5 * (lo + hi));
  }
  return table;
}

namespace {

double radial_fraction(double r, double a) {
  if (!(a > 0.0)) throw InvalidArgument("pipe radius must be positive");
  if (r < 0.0 || r > a * (1.0 + 1e-12))
    throw OutOfDomain("radius outside the pipe cross-section");
  return std::min(r / a, 1.0);
}

}  // namespace

double pipe_steady(double r, const PipeSpec& spec) {
  const double s = radial_fraction(r, spec.a);
  const double& mu = spec.params.mu;
  return -spec.dpdz * spec.a * spec.a / (4.0 * mu) * (1.0 - s * s);
}

double pipe_transient(double r, double t, const PipeSpec& spec,
                      const BesselTable& table) {
  const double s = radial_fraction(r, spec.a);
  if (t < 0.0) throw OutOfDomain("time must be non-negative");
  const double mu = spec.params.mu;
  const double tau = t * mu / (spec.params.rho * spec.a * spec.a);
  double bracket = 1.0 - s * s;
  for (double lam : table.roots) {
    const double decay = std::exp(-lam * lam * tau);
    if (decay < 1e-30) break;  // roots ascend, later terms are smaller
    bracket -= 8.0 * bessel_j(0, lam * s) /
               (lam * lam * lam * bessel_j(1, lam)) * decay;
  }
  return -spec.dpdz * spec.a * spec.a / (4.0 * mu) * bracket;
}

double plane_poiseuille(double y, double H, double dpdx, double mu) {
  if (!(H > 0.0)) throw InvalidArgument("channel height must be positive");
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (y < -1e-12 * H || y > H * (1.0 + 1e-12))
    throw OutOfDomain("coordinate outside the channel");
  const double s = std::clamp(2.0 * y / H - 1.0, -1.0, 1.0);
  return -dpdx * H * H / (8.0 * mu) * (1.0 - s * s);
}

double reynolds_pipe(double vz_max, double D, const MaterialParams& params) {
  return vz_max * D * params.rho / (2.0 * params.mu);
}

}  // namespace triform
