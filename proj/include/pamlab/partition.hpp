#pragma once

// Dyadic partition of unity on frequency space.
//
// chi is a smooth radial cutoff, 1 on {|x| <= a} and 0 on {|x| >= c}, built
// from the e^{-1/t} step; rho(x) = chi(x/2) - chi(x) is supported in the
// shell {a <= |x| <= 2c}. With b = 2c and a < c < 2a the family
//   rho_{-1} = chi,  rho_j = rho(2^{-j} .)  (j >= 0)
// telescopes to 1 everywhere, chi is disjoint from rho_j for j >= 1, and
// shells with |i-j| >= 2 are disjoint. Violated radii are rejected by name;
// the telescoping and disjointness are re-verified numerically on
// construction (cheap, once).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pamlab/grid.hpp"

namespace pamlab {

namespace detail {

inline double bump_h(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

// Smooth monotone step: 0 for s <= 0, 1 for s >= 1.
inline double smooth_step(double s) {
  const double hs = bump_h(s);
  const double hc = bump_h(1.0 - s);
  return hs == 0.0 ? 0.0 : hs / (hs + hc);
}

}  // namespace detail

struct DyadicPartition {
  double a = 1.0;        // chi plateau radius
  double b = 8.0 / 3.0;  // outer shell radius (= 2c)
  double c = 4.0 / 3.0;  // chi support radius

  double chi_radial(double r) const {
    if (r <= a) return 1.0;
    if (r >= c) return 0.0;
    return detail::smooth_step((c - r) / (c - a));
  }
  double rho_radial(double r) const { return chi_radial(0.5 * r) - chi_radial(r); }

  // rho_j(k) for j >= 0; j = -1 is chi.
  double weight(int j, double k1, double k2) const {
    const double r = std::hypot(k1, k2);
    return j < 0 ? chi_radial(r) : rho_radial(std::ldexp(r, -j));
  }

  // Largest block index whose shell meets {|k| <= kmax}; -1 if only chi does.
  int j_max(double kmax) const {
    int j = -1;
    while (std::ldexp(a, j + 1) < kmax) ++j;
    return j;
  }
};

inline DyadicPartition build_partition(double a = 1.0, double b = 8.0 / 3.0,
                                       double c = 4.0 / 3.0) {
  auto reject = [](const std::string& cond) {
    throw std::invalid_argument("build_partition: inadmissible radii: " + cond);
  };
  if (!(a > 0)) reject("a > 0");
  if (!(a < c)) reject("a < c (smooth transition band)");
  if (!(c < 2 * a)) reject("c < 2a (shell disjointness for |i-j| >= 2)");
  if (std::abs(b - 2 * c) > 1e-12) reject("b = 2c (shell outer radius)");

  DyadicPartition part{a, b, c};

  // Startup verification on a radial grid: partition of unity and the two
  // support disjointness conditions.
  const int samples = 10000;
  const double rmax = std::ldexp(b, 6);
  for (int i = 0; i <= samples; ++i) {
    const double r = rmax * i / samples;
    double s = part.chi_radial(r);
    for (int j = 0; std::ldexp(part.a, j) < rmax * 2; ++j)
      s += part.rho_radial(std::ldexp(r, -j));
    if (std::abs(s - 1.0) > 1e-8)
      reject("partition of unity (deviation " + std::to_string(s - 1.0) +
             " at r = " + std::to_string(r) + ")");
    for (int j = 1; j <= 8; ++j)
      if (part.chi_radial(r) * part.rho_radial(std::ldexp(r, -j)) != 0.0)
        reject("supp chi meets supp rho_" + std::to_string(j));
    for (int i1 = 0; i1 <= 8; ++i1)
      for (int j1 = i1 + 2; j1 <= 8; ++j1)
        if (part.rho_radial(std::ldexp(r, -i1)) *
                part.rho_radial(std::ldexp(r, -j1)) != 0.0)
          reject("supp rho_" + std::to_string(i1) + " meets supp rho_" +
                 std::to_string(j1));
  }
  return part;
}

}  // namespace pamlab
