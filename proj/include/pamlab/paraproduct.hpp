#pragma once

// Bony decomposition: f*g = f<g + f>g + f o g, with
//   f<g  = sum_{j} (sum_{i <= j-2} Delta_i f) Delta_j g   (low-high)
//   f o g = sum_{|i-j| <= 1} Delta_i f Delta_j g           (resonant)
// Every block product is evaluated exactly: both factors are sampled on a
// common oversampled grid (size >= 2(B_f+B_g)+1, callers can force a larger
// floor), multiplied pointwise, and transformed back. Since the three pieces
// partition all block pairs (i,j), the decomposition identity holds to
// rounding error by construction.

#include <vector>

#include "pamlab/besov.hpp"
#include "pamlab/grid.hpp"
#include "pamlab/partition.hpp"
#include "pamlab/transforms.hpp"

namespace pamlab {

namespace detail {

// Position samples of every block Delta_j F (j = -1..j_max) on the M grid.
inline std::vector<std::vector<cplx>> block_samples(const DyadicPartition& part,
                                                    const SpectralField& F,
                                                    int M) {
  const int jm = block_j_max(part, F);
  std::vector<std::vector<cplx>> s;
  s.reserve(jm + 2);
  for (int j = -1; j <= jm; ++j)
    s.push_back(sample_on_grid(block(part, j, F), M));
  return s;
}

inline void mul_add(std::vector<cplx>& acc, const std::vector<cplx>& a,
                    const std::vector<cplx>& b) {
  for (long i = 0; i < static_cast<long>(acc.size()); ++i) acc[i] += a[i] * b[i];
}

inline int product_grid(const SpectralField& f, const SpectralField& g,
                        int min_grid) {
  return make_odd(std::max(2 * (f.bandwidth() + g.bandwidth()) + 1, min_grid));
}

}  // namespace detail

inline SpectralField paraproduct_lt(const DyadicPartition& part,
                                    const SpectralField& f,
                                    const SpectralField& g, int min_grid = 0) {
  require_same_grid(f, g, "paraproduct_lt");
  const int M = detail::product_grid(f, g, min_grid);
  const auto sf = detail::block_samples(part, f, M);  // sf[v] = Delta_{v-1} f
  const auto sg = detail::block_samples(part, g, M);
  const int jf_max = static_cast<int>(sf.size()) - 2;
  const int jg_max = static_cast<int>(sg.size()) - 2;
  // Running prefix sum_{i <= j-2} Delta_i f, advanced as j increases; the
  // first contributing term has j = 1 (blocks start at i = -1).
  std::vector<cplx> prefix(static_cast<long>(M) * M, cplx{});
  std::vector<cplx> acc(prefix.size(), cplx{});
  for (int j = 1; j <= jg_max; ++j) {
    const int fi = j - 2;
    if (fi <= jf_max) {
      const auto& add = sf[fi + 1];
      for (long i = 0; i < static_cast<long>(prefix.size()); ++i)
        prefix[i] += add[i];
    }
    detail::mul_add(acc, prefix, sg[j + 1]);
  }
  const int B_out = f.bandwidth() + g.bandwidth();
  return spectral_from_samples(std::move(acc), M, B_out, f.grid);
}

inline SpectralField paraproduct_gt(const DyadicPartition& part,
                                    const SpectralField& f,
                                    const SpectralField& g, int min_grid = 0) {
  return paraproduct_lt(part, g, f, min_grid);
}

inline SpectralField resonant_product(const DyadicPartition& part,
                                      const SpectralField& f,
                                      const SpectralField& g, int min_grid = 0) {
  require_same_grid(f, g, "resonant_product");
  const int M = detail::product_grid(f, g, min_grid);
  const auto sf = detail::block_samples(part, f, M);
  const auto sg = detail::block_samples(part, g, M);
  std::vector<cplx> acc(static_cast<long>(M) * M, cplx{});
  std::vector<cplx> tri(acc.size());
  for (int jg = 0; jg < static_cast<int>(sg.size()); ++jg) {
    std::fill(tri.begin(), tri.end(), cplx{});
    for (int jf = jg - 1; jf <= jg + 1; ++jf) {
      if (jf < 0 || jf >= static_cast<int>(sf.size())) continue;
      const auto& add = sf[jf];
      for (long i = 0; i < static_cast<long>(tri.size()); ++i) tri[i] += add[i];
    }
    detail::mul_add(acc, tri, sg[jg]);
  }
  const int B_out = f.bandwidth() + g.bandwidth();
  return spectral_from_samples(std::move(acc), M, B_out, f.grid);
}

}  // namespace pamlab
