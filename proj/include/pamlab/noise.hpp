#pragma once

// Enhanced noise: the rescaled potential xi_N, the Poisson-equation field
// X_N, the renormalization constants, the renormalized resonant area term,
// and the random operator built from them.
//
// Normalizations (all relative to the dft/idft pair in transforms.hpp):
//   F xi(k)   = eps * sum_l e^{-i<k,eps l>} eta(l)        (= dft(eta)/eps)
//   F X(k)    = 1_{k != 0} F xi(k) / (f(eps k) |k|^2)
//   area      = X o xi - c_tilde, the constant subtracted as (2pi)^2 c_tilde
//               off the 0-mode coefficient
//   c_N       = (2pi)^{-2} sum_{k in ModeSet, k != 0} 1 / |k|^2
//   c_tilde_N = (2pi)^{-2} sum_{k in ModeSet, k != 0} 1 / (f(eps k) |k|^2)
// E[(X o xi)(x)] = c_tilde_N exactly, which pins all conventions at once.

#include <cmath>
#include <stdexcept>

#include "pamlab/besov.hpp"
#include "pamlab/grid.hpp"
#include "pamlab/paraproduct.hpp"
#include "pamlab/partition.hpp"
#include "pamlab/potential.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/transforms.hpp"
#include "pamlab/walk.hpp"

namespace pamlab {

// Largest |k|_inf with |k|_inf < K/2 (the band kept by the projector P_K).
inline int half_band(int K) {
  if (K < 1) throw std::invalid_argument("half_band: K must be >= 1");
  return K % 2 == 1 ? (K - 1) / 2 : K / 2 - 1;
}

inline SpectralField build_xi(const Potential& eta) {
  const double inv_eps = eta.grid.N / two_pi;
  SpectralField xi = dft_lattice(to_lattice_field(eta));
  for (auto& z : xi.coeffs) z *= inv_eps;
  return xi;
}

inline SpectralField build_X(const SpectralField& xi, const WalkMeasure& mu) {
  const double eps = xi.grid.epsilon();
  SpectralField X = xi;
  const int B = X.bandwidth();
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      if (k1 == 0 && k2 == 0) {
        X.at(0, 0) = cplx{};
        continue;
      }
      const double k2norm = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
      X.at(k1, k2) /= multiplier_f(eps * k1, eps * k2, mu) * k2norm;
    }
  return X;
}

inline double renorm_constant_cN(int N) {
  if (N < 1) throw std::invalid_argument("renorm_constant_cN: N must be >= 1");
  const int h = half_band(N);
  double s = 0;
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      s += 1.0 / (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2);
    }
  return s / (two_pi * two_pi);
}

inline double renorm_constant_cK(int K) { return renorm_constant_cN(K); }

// f-weighted sum truncated to the band of P_K, with f evaluated on the
// N-grid frequencies (eps = 2pi/N). K = N gives the full c_tilde_N.
inline double renorm_constant_tilde_truncated(int N, int K,
                                              const WalkMeasure& mu) {
  if (K > N)
    throw std::invalid_argument("renorm_constant_tilde_truncated: K exceeds N");
  const double eps = two_pi / N;
  const int h = half_band(K);
  double s = 0;
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double k2norm = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
      s += 1.0 / (multiplier_f(eps * k1, eps * k2, mu) * k2norm);
    }
  return s / (two_pi * two_pi);
}

inline double renorm_constant_tilde(int N, const WalkMeasure& mu) {
  return renorm_constant_tilde_truncated(N, N, mu);
}

struct EnhancedNoise {
  GridSpec grid;
  WalkMeasure mu;
  SpectralField xi;
  SpectralField X;
  SpectralField area;  // X o xi - c_tilde_N
  double c_N = 0;
  double c_tilde_N = 0;
  std::uint64_t seed = 0;

  explicit EnhancedNoise(GridSpec g)
      : grid(g), xi(g, g.N), X(g, g.N), area(g, g.N) {}
};

inline EnhancedNoise enhanced_noise(const Potential& eta,
                                    const DyadicPartition& part,
                                    const WalkMeasure& mu = nearest_neighbor_walk()) {
  EnhancedNoise en(eta.grid);
  en.mu = mu;
  en.seed = eta.seed;
  en.xi = build_xi(eta);
  en.X = build_X(en.xi, mu);
  en.c_N = renorm_constant_cN(eta.grid.N);
  en.c_tilde_N = renorm_constant_tilde(eta.grid.N, mu);
  en.area = resonant_product(part, en.X, en.xi, 2 * eta.grid.N + 1);
  en.area.at(0, 0) -= cplx{two_pi * two_pi * en.c_tilde_N, 0.0};
  return en;
}

// P_K X o P_K xi - c_K: the coarse stand-in whose distance to the full area
// term is the Cauchy diagnostic.
inline SpectralField coarse_resonant(const EnhancedNoise& en, int K,
                                     const DyadicPartition& part) {
  const auto Xk = projector_PK(en.X, K);
  const auto xik = projector_PK(en.xi, K);
  SpectralField out = resonant_product(part, Xk, xik, 2 * en.grid.N + 1);
  out.at(0, 0) -= cplx{two_pi * two_pi * renorm_constant_cK(K), 0.0};
  return out;
}

// || area - coarse_resonant(K) || in B^gamma_{inf,inf}.
inline double cauchy_diagnostic(const EnhancedNoise& en, int K, double gamma,
                                const DyadicPartition& part) {
  SpectralField diff(en.grid, 1);
  add_scaled(diff, en.area, 1.0);
  add_scaled(diff, coarse_resonant(en, K, part), -1.0);
  return besov_norm(part, diff, gamma, inf, inf);
}

// A_N(u) = Pi_N[(Pi_N(u < X)) o xi] - P_N[(u < X) o xi], with every product
// evaluated exactly on a grid of at least 4N+1 points.
inline SpectralField random_operator_apply(const SpectralField& u,
                                           const EnhancedNoise& en,
                                           const DyadicPartition& part) {
  require_same_grid(u, en.xi, "random_operator_apply");
  if (!u.is_mode_set())
    throw std::invalid_argument("random_operator_apply: u must be ModeSet-supported");
  const int min_grid = 4 * en.grid.N + 1;
  const auto lt = paraproduct_lt(part, u, en.X, min_grid);
  const auto branch1 =
      pi_N(resonant_product(part, pi_N(lt), en.xi, min_grid));
  const auto branch2 =
      projector_PK(resonant_product(part, lt, en.xi, min_grid), en.grid.N);
  SpectralField out(en.grid);
  add_scaled(out, branch1, 1.0);
  add_scaled(out, branch2, -1.0);
  return out;
}

// Real random field with block-j coefficients damped by 2^{-j alpha}, then
// normalized to unit B^alpha_{1,inf} norm.
inline SpectralField make_test_field(GridSpec grid, const DyadicPartition& part,
                                     double alpha, Rng& rng) {
  LatticeField noise(grid);
  for (auto& v : noise.values) v = rng.gaussian();
  SpectralField u = dft_lattice(noise);
  const int B = u.bandwidth();
  const int jm = part.j_max(std::sqrt(2.0) * B) + 1;
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      double m = 0;
      for (int j = -1; j <= jm; ++j)
        m += std::pow(2.0, -j * alpha) * part.weight(j, k1, k2);
      u.at(k1, k2) *= m;
    }
  const double norm = besov_norm(part, u, alpha, 1, inf);
  if (norm > 0)
    for (auto& z : u.coeffs) z /= norm;
  return u;
}

// Max over random unit-C^alpha_1 test fields of ||A_N u||_{C^{2 alpha - 2}_1};
// a lower bound on the operator norm, usable as a cross-N trend diagnostic.
inline double random_operator_norm_estimate(const EnhancedNoise& en,
                                            const DyadicPartition& part,
                                            double alpha, int trials,
                                            std::uint64_t seed) {
  if (!(alpha > 0.5 && alpha < 1.0))
    throw std::invalid_argument("random_operator_norm_estimate: alpha must be in (1/2, 1)");
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed_fanout(seed, "operator-test-field", en.grid.N, t));
    const auto u = make_test_field(en.grid, part, alpha, rng);
    const auto Au = random_operator_apply(u, en, part);
    worst = std::max(worst, besov_norm(part, Au, 2 * alpha - 2, 1, inf));
  }
  return worst;
}

}  // namespace pamlab
