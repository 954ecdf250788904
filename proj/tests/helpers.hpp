#pragma once

// Shared test fixtures: small brute-force oracles kept deliberately
// independent of the library's FFT-based implementations.

#include <complex>
#include <random>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/transforms.hpp"

namespace testutil {

using pamlab::cplx;
using pamlab::two_pi;

// O(N^4) direct transform: F(k) = eps^2 sum_l phi(eps l) e^{-i<k, eps l>}.
inline pamlab::SpectralField naive_dft(const pamlab::LatticeField& phi) {
  const int h = phi.grid.half();
  const double eps = phi.grid.epsilon();
  pamlab::SpectralField F(phi.grid);
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      cplx acc{};
      for (int l1 = -h; l1 <= h; ++l1)
        for (int l2 = -h; l2 <= h; ++l2)
          acc += phi.at(l1, l2) *
                 std::polar(1.0, -eps * (k1 * l1 + k2 * l2));
      F.at(k1, k2) = eps * eps * acc;
    }
  return F;
}

// Direct minimization over the shift j in k + jN.
inline int naive_fold_coord(long long k, int N) {
  long long best = k;
  for (long long j = -3 - std::abs(k) / N; j <= 3 + std::abs(k) / N; ++j) {
    const long long cand = k + j * N;
    if (std::abs(cand) < std::abs(best)) best = cand;
  }
  return static_cast<int>(best);
}

inline pamlab::LatticeField random_real_field(pamlab::GridSpec g,
                                              unsigned seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  pamlab::LatticeField phi(g);
  for (auto& v : phi.values) v = cplx{u(eng), 0.0};
  return phi;
}

inline pamlab::LatticeField random_complex_field(pamlab::GridSpec g,
                                                 unsigned seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  pamlab::LatticeField phi(g);
  for (auto& v : phi.values) v = cplx{u(eng), u(eng)};
  return phi;
}

inline double max_coeff_diff(const pamlab::SpectralField& a,
                             const pamlab::SpectralField& b) {
  const int B = std::max(a.bandwidth(), b.bandwidth());
  double d = 0;
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2)
      d = std::max(d, std::abs(a.coeff_or_zero(k1, k2) - b.coeff_or_zero(k1, k2)));
  return d;
}

inline double max_value_diff(const pamlab::LatticeField& a,
                             const pamlab::LatticeField& b) {
  double d = 0;
  for (size_t i = 0; i < a.values.size(); ++i)
    d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

}  // namespace testutil
