#pragma once

// Littlewood-Paley blocks and Besov norms for spectral fields.
//
// Block j multiplies coefficients by rho_j(k); the L^p norms of blocks are
// computed by quadrature of the trigonometric extension on a uniform MxM
// grid with M = max(2N+1, field width), which resolves p = 2 exactly and is
// the documented approximation for other p (p = infinity is the grid max).

#include <cmath>
#include <limits>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/partition.hpp"
#include "pamlab/transforms.hpp"

namespace pamlab {

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline int block_j_max(const DyadicPartition& part, const SpectralField& F) {
  return part.j_max(std::sqrt(2.0) * F.bandwidth());
}

inline SpectralField block(const DyadicPartition& part, int j,
                           const SpectralField& F) {
  if (j < -1)
    throw std::invalid_argument("block: j must be >= -1");
  SpectralField out = F;
  const int B = F.bandwidth();
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2)
      out.at(k1, k2) *= part.weight(j, k1, k2);
  return out;
}

inline std::vector<SpectralField> block_decomposition(
    const DyadicPartition& part, const SpectralField& F) {
  std::vector<SpectralField> blocks;
  const int jm = block_j_max(part, F);
  blocks.reserve(jm + 2);
  for (int j = -1; j <= jm; ++j) blocks.push_back(block(part, j, F));
  return blocks;
}

inline int quadrature_grid(const SpectralField& F) {
  return std::max(2 * F.grid.N + 1, F.width);
}

inline double lp_norm_of_samples(const std::vector<cplx>& s, int M, double p) {
  if (p == inf) {
    double mx = 0;
    for (const auto& z : s) mx = std::max(mx, std::abs(z));
    return mx;
  }
  double acc = 0;
  for (const auto& z : s) acc += std::pow(std::abs(z), p);
  const double cell = (two_pi / M) * (two_pi / M);
  return std::pow(cell * acc, 1.0 / p);
}

inline double lp_norm(const SpectralField& F, double p, int M = 0) {
  if (p < 1) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (M == 0) M = quadrature_grid(F);
  return lp_norm_of_samples(sample_on_grid(F, M), M, p);
}

// || (2^{j alpha} ||Delta_j f||_{L^p})_j ||_{l^q}
inline double besov_norm(const DyadicPartition& part, const SpectralField& F,
                         double alpha, double p, double q) {
  if (p < 1 || q < 1)
    throw std::invalid_argument("besov_norm: p and q must be >= 1");
  const int M = quadrature_grid(F);
  const int jm = block_j_max(part, F);
  double acc = 0;
  for (int j = -1; j <= jm; ++j) {
    const double term = std::pow(2.0, j * alpha) * lp_norm(block(part, j, F), p, M);
    if (q == inf)
      acc = std::max(acc, term);
    else
      acc += std::pow(term, q);
  }
  return q == inf ? acc : std::pow(acc, 1.0 / q);
}

struct EmbeddingReport {
  double max_ratio = 0;
  int samples = 0;
  int excluded = 0;  // zero-norm fields skipped (0/0)
};

// Ratio of the embedded-side norm B^{alpha - 2(1/p1 - 1/p2)}_{p2,inf} to the
// source norm B^{alpha}_{p1,inf} over the supplied fields.
inline EmbeddingReport besov_embedding_check(const DyadicPartition& part,
                                             const std::vector<SpectralField>& fields,
                                             double p1, double p2, double alpha) {
  if (p2 < p1)
    throw std::invalid_argument("besov_embedding_check: requires p1 <= p2");
  const double inv1 = p1 == inf ? 0.0 : 1.0 / p1;
  const double inv2 = p2 == inf ? 0.0 : 1.0 / p2;
  const double alpha2 = alpha - 2.0 * (inv1 - inv2);
  EmbeddingReport rep;
  for (const auto& F : fields) {
    ++rep.samples;
    const double denom = besov_norm(part, F, alpha, p1, inf);
    if (denom == 0) {
      ++rep.excluded;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, besov_norm(part, F, alpha2, p2, inf) / denom);
  }
  return rep;
}

}  // namespace pamlab
