#pragma once

// The jump measure of the underlying random walk and its Fourier multiplier.
//
// A valid measure mu has nonnegative mass off 0, total mass 0, vanishing
// first and mixed second moments, per-axis second moments equal to 2, finite
// support (hence all moments), is radial in j, and gives positive mass to
// (0,1). The generator acts on lattice extensions as
//   (Lap_rw^N phi)(x) = eps^{-2} sum_j mu({j}) phi(x + eps j),
// diagonal in Fourier with symbol -|k|^2 f(eps k),
//   f(x) = sum_j mu({j}) (1 - cos<x,j>) / |x|^2,   f(0) = 1.

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/transforms.hpp"

namespace pamlab {

struct WalkMeasure {
  std::map<std::array<int, 2>, double> atoms;

  double mass(std::array<int, 2> j) const {
    auto it = atoms.find(j);
    return it == atoms.end() ? 0.0 : it->second;
  }
  // Total positive jump rate lambda = -mu({0}).
  double jump_rate() const { return -mass({0, 0}); }
};

inline WalkMeasure nearest_neighbor_walk() {
  WalkMeasure mu;
  mu.atoms[{1, 0}] = mu.atoms[{-1, 0}] = mu.atoms[{0, 1}] = mu.atoms[{0, -1}] = 1.0;
  mu.atoms[{0, 0}] = -4.0;
  return mu;
}

// Jumps to the four unit and the four doubled-unit neighbors. The second
// moment constraint 2a + 8b = 2 is the caller's to satisfy; validation
// reports any violation.
inline WalkMeasure range2_radial_walk(double a, double b) {
  WalkMeasure mu;
  mu.atoms[{1, 0}] = mu.atoms[{-1, 0}] = mu.atoms[{0, 1}] = mu.atoms[{0, -1}] = a;
  mu.atoms[{2, 0}] = mu.atoms[{-2, 0}] = mu.atoms[{0, 2}] = mu.atoms[{0, -2}] = b;
  mu.atoms[{0, 0}] = -4.0 * (a + b);
  return mu;
}

struct ValidationReport {
  struct Item {
    std::string name;
    bool pass;
    double value;
    std::string detail;
  };
  std::vector<Item> items;
  bool pass = true;

  void add(std::string name, bool ok, double value, std::string detail = {}) {
    pass = pass && ok;
    items.push_back({std::move(name), ok, value, std::move(detail)});
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& it : items)
      os << (it.pass ? "[ok]   " : "[FAIL] ") << it.name << " = " << it.value
         << (it.detail.empty() ? "" : " (" + it.detail + ")") << "\n";
    return os.str();
  }
};

inline ValidationReport validate_walk_measure(const WalkMeasure& mu) {
  if (mu.atoms.empty())
    throw std::invalid_argument("validate_walk_measure: empty measure");
  ValidationReport rep;
  const double tol = 1e-12;

  double total = 0, m1 = 0, m2 = 0, mixed = 0, s1 = 0, s2 = 0, m6 = 0;
  bool nonneg = true;
  for (const auto& [j, m] : mu.atoms) {
    if ((j[0] != 0 || j[1] != 0) && m < 0) nonneg = false;
    total += m;
    m1 += j[0] * m;
    m2 += j[1] * m;
    mixed += j[0] * j[1] * m;
    s1 += static_cast<double>(j[0]) * j[0] * m;
    s2 += static_cast<double>(j[1]) * j[1] * m;
    const double r2 = static_cast<double>(j[0]) * j[0] + static_cast<double>(j[1]) * j[1];
    m6 += r2 * r2 * r2 * std::abs(m);
  }
  rep.add("nonnegative off 0", nonneg, nonneg ? 1 : 0);
  rep.add("total mass 0", std::abs(total) <= tol, total);
  rep.add("first moment (axis 1) 0", std::abs(m1) <= tol, m1);
  rep.add("first moment (axis 2) 0", std::abs(m2) <= tol, m2);
  rep.add("mixed second moment 0", std::abs(mixed) <= tol, mixed);
  rep.add("second moment (axis 1) = 2", std::abs(s1 - 2) <= tol, s1);
  rep.add("second moment (axis 2) = 2", std::abs(s2 - 2) <= tol, s2);
  rep.add("sixth moment finite", std::isfinite(m6), m6, "finite support");

  // Radial: equal mass within each |j|^2 shell.
  bool radial = true;
  std::map<long, double> shell;
  for (const auto& [j, m] : mu.atoms) {
    if (j[0] == 0 && j[1] == 0) continue;
    long r2 = static_cast<long>(j[0]) * j[0] + static_cast<long>(j[1]) * j[1];
    auto it = shell.find(r2);
    if (it == shell.end())
      shell[r2] = m;
    else if (std::abs(it->second - m) > tol)
      radial = false;
  }
  rep.add("radial in j", radial, radial ? 1 : 0);
  rep.add("mu({(0,1)}) > 0", mu.mass({0, 1}) > 0, mu.mass({0, 1}));
  return rep;
}

// f(x) = sum_j mu({j}) (1 - cos<x,j>)/|x|^2 with the analytic value 1 at 0.
// 1 - cos t = 2 sin^2(t/2) avoids cancellation for small arguments.
inline double multiplier_f(double x1, double x2, const WalkMeasure& mu) {
  const double r2 = x1 * x1 + x2 * x2;
  if (r2 == 0.0) return 1.0;
  double acc = 0;
  for (const auto& [j, m] : mu.atoms) {
    if (j[0] == 0 && j[1] == 0) continue;
    const double t = x1 * j[0] + x2 * j[1];
    const double s = std::sin(0.5 * t);
    acc += m * 2.0 * s * s;
  }
  return acc / r2;
}

// Minimum of f over an n x n scan of [-pi, pi]^2. Ellipticity holds iff this
// stays bounded away from 0 as n grows.
inline double inf_multiplier_scan(const WalkMeasure& mu, int n) {
  double lo = multiplier_f(0.0, 0.0, mu);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x1 = -pi + two_pi * i / (n - 1);
      const double x2 = -pi + two_pi * j / (n - 1);
      lo = std::min(lo, multiplier_f(x1, x2, mu));
    }
  return lo;
}

// Coefficient-wise multiply by -|k|^2 f(eps k).
inline SpectralField apply_discrete_laplacian(const SpectralField& F,
                                              const WalkMeasure& mu) {
  const double eps = F.grid.epsilon();
  SpectralField out = F;
  const int B = F.bandwidth();
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      const double k2norm = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
      out.at(k1, k2) *= -k2norm * multiplier_f(eps * k1, eps * k2, mu);
    }
  return out;
}

// Direct stencil eps^{-2} sum_j mu({j}) phi(x + eps j) on lattice values,
// with periodic wrap. Used as the position-space route (and test oracle).
inline LatticeField apply_laplacian_stencil(const LatticeField& phi,
                                            const WalkMeasure& mu) {
  const int N = phi.grid.N;
  const int h = phi.grid.half();
  const double ieps2 = 1.0 / (phi.grid.epsilon() * phi.grid.epsilon());
  LatticeField out(phi.grid);
  for (int l1 = -h; l1 <= h; ++l1)
    for (int l2 = -h; l2 <= h; ++l2) {
      cplx acc{};
      for (const auto& [j, m] : mu.atoms)
        acc += m * phi.at(fold_coord(l1 + j[0], N), fold_coord(l2 + j[1], N));
      out.at(l1, l2) = acc * ieps2;
    }
  return out;
}

// Heat flow e^{t Lap_rw^N}: multiply coefficients by e^{-t |k|^2 f(eps k)}.
inline SpectralField heat_semigroup(const SpectralField& F, double t,
                                    const WalkMeasure& mu) {
  if (t < 0) throw std::invalid_argument("heat_semigroup: t must be >= 0");
  const double eps = F.grid.epsilon();
  SpectralField out = F;
  const int B = F.bandwidth();
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      const double k2norm = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
      out.at(k1, k2) *= std::exp(-t * k2norm * multiplier_f(eps * k1, eps * k2, mu));
    }
  return out;
}

}  // namespace pamlab
