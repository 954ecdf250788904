#pragma once

// Discrete Fourier analysis on the torus lattice.
//
// Conventions (used verbatim by every module and serializer):
//   forward   F(k) = eps^2 * sum_{|l|_inf<N/2} phi(eps*l) e^{-i<k, eps*l>}
//   inverse   phi(eps*l) = (2pi)^{-2} * sum_{|k|_inf<N/2} F(k) e^{+i<k, eps*l>}
// which is an exact pair because eps^2 N^2 = (2pi)^2. A SpectralField with
// bandwidth B represents the trigonometric polynomial
//   u(x) = (2pi)^{-2} * sum_{|k|_inf<=B} c(k) e^{i<k,x>},
// so for mode-set fields u interpolates the lattice values (the extension).
//
// Exactness rule for products: a product of bandwidth-B1 and B2 polynomials
// is recovered exactly from an MxM sample grid iff M >= 2(B1+B2)+1. Callers
// may request a larger floor (the calculus uses >= 2N, the random operator
// >= 4N); we always round M up to odd so centered indexing is unambiguous.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pamlab/fft.hpp"
#include "pamlab/grid.hpp"

namespace pamlab {

namespace detail {

inline int wrap(int a, int M) {
  int r = a % M;
  return r < 0 ? r + M : r;
}

inline int make_odd(int M) { return (M % 2 == 0) ? M + 1 : M; }

// Phase table e^{i * sign * 2pi * k * t / M} for k = 0..M-1.
inline std::vector<cplx> phase_row(int M, double t, int sign) {
  std::vector<cplx> row(M);
  for (int k = 0; k < M; ++k)
    row[k] = std::polar(1.0, sign * two_pi * k * t / M);
  return row;
}

}  // namespace detail

inline SpectralField dft_lattice(const LatticeField& phi) {
  const int N = phi.grid.N;
  const int h = phi.grid.half();
  const double eps = phi.grid.epsilon();
  std::vector<cplx> out(phi.grid.sites());
  std::vector<cplx> in(phi.values);
  detail::fft2(N, FFTW_FORWARD, in.data(), out.data());
  // Centered site offset: e^{-i k . eps(m-h)} = e^{i 2pi k h / N} e^{-i 2pi k m / N}.
  auto ph = detail::phase_row(N, static_cast<double>(h), +1);
  SpectralField F(phi.grid);
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      const int a = detail::wrap(k1, N), b = detail::wrap(k2, N);
      F.at(k1, k2) = eps * eps * ph[a] * ph[b] * out[static_cast<long>(a) * N + b];
    }
  return F;
}

inline LatticeField idft_lattice(const SpectralField& F) {
  if (!F.is_mode_set())
    throw std::invalid_argument("idft_lattice: field wider than the mode set");
  const int N = F.grid.N;
  const int h = F.grid.half();
  std::vector<cplx> in(F.grid.sites()), out(F.grid.sites());
  auto ph = detail::phase_row(N, static_cast<double>(h), -1);
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      const int a = detail::wrap(k1, N), b = detail::wrap(k2, N);
      in[static_cast<long>(a) * N + b] = F.at(k1, k2) * ph[a] * ph[b];
    }
  detail::fft2(N, FFTW_BACKWARD, in.data(), out.data());
  // out[m] is (2pi)^2 phi(eps (m - h)) per axis, exactly the storage layout.
  LatticeField phi(F.grid);
  const double scale = 1.0 / (two_pi * two_pi);
  for (long i = 0; i < static_cast<long>(out.size()); ++i)
    phi.values[i] = scale * out[i];
  return phi;
}

// Trigonometric extension evaluated at an arbitrary point of the torus.
inline cplx extension_eval(const SpectralField& F, double x1, double x2) {
  const int B = F.bandwidth();
  const int W = F.width;
  std::vector<cplx> p1(W), p2(W);
  for (int k = -B; k <= B; ++k) {
    p1[k + B] = std::polar(1.0, k * x1);
    p2[k + B] = std::polar(1.0, k * x2);
  }
  cplx acc{};
  for (int k1 = -B; k1 <= B; ++k1) {
    cplx row{};
    const cplx* c = &F.coeffs[static_cast<long>(k1 + B) * W];
    for (int k2 = -B; k2 <= B; ++k2) row += c[k2 + B] * p2[k2 + B];
    acc += row * p1[k1 + B];
  }
  return acc / (two_pi * two_pi);
}

// Position samples u(2pi m / M) on the uniform MxM grid, row-major in m.
// Requires M >= width so distinct modes occupy distinct slots.
inline std::vector<cplx> sample_on_grid(const SpectralField& F, int M) {
  if (M < F.width)
    throw std::invalid_argument("sample_on_grid: grid smaller than bandwidth");
  const int B = F.bandwidth();
  std::vector<cplx> in(static_cast<long>(M) * M, cplx{}), out(in.size());
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2)
      in[static_cast<long>(detail::wrap(k1, M)) * M + detail::wrap(k2, M)] =
          F.at(k1, k2);
  detail::fft2(M, FFTW_BACKWARD, in.data(), out.data());
  const double scale = 1.0 / (two_pi * two_pi);
  for (auto& z : out) z *= scale;
  return out;
}

// Recover coefficients |k|_inf <= B_out from samples on the MxM grid.
// Exact when the sampled function is a trig polynomial of bandwidth <= B_out
// and M >= 2*B_out+1.
inline SpectralField spectral_from_samples(std::vector<cplx> samples, int M,
                                           int B_out, GridSpec grid) {
  std::vector<cplx> out(samples.size());
  detail::fft2(M, FFTW_FORWARD, samples.data(), out.data());
  SpectralField F(grid, 2 * B_out + 1);
  const double scale = (two_pi / M) * (two_pi / M);
  for (int k1 = -B_out; k1 <= B_out; ++k1)
    for (int k2 = -B_out; k2 <= B_out; ++k2)
      F.at(k1, k2) =
          scale * out[static_cast<long>(detail::wrap(k1, M)) * M + detail::wrap(k2, M)];
  return F;
}

// Exact pointwise product via an oversampled grid; min_grid lets callers
// enforce a larger floor than the 2(B1+B2)+1 exactness bound.
inline SpectralField pointwise_product(const SpectralField& f,
                                       const SpectralField& g,
                                       int min_grid = 0) {
  require_same_grid(f, g, "pointwise_product");
  const int B_out = f.bandwidth() + g.bandwidth();
  const int M = detail::make_odd(std::max(2 * B_out + 1, min_grid));
  auto sf = sample_on_grid(f, M);
  auto sg = sample_on_grid(g, M);
  for (long i = 0; i < static_cast<long>(sf.size()); ++i) sf[i] *= sg[i];
  return spectral_from_samples(std::move(sf), M, B_out, f.grid);
}

// Aliasing fold: every integer mode k is sent to its representative in
// (-N/2, N/2)^2 and coefficients are accumulated there.
inline SpectralField pi_N(const SpectralField& F) {
  const int N = F.grid.N;
  SpectralField out(F.grid);  // mode-set width
  const int B = F.bandwidth();
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      const cplx c = F.at(k1, k2);
      if (c == cplx{}) continue;
      out.at(fold_coord(k1, N), fold_coord(k2, N)) += c;
    }
  return out;
}

// Sharp Fourier truncation to |k|_inf < K/2.
inline SpectralField projector_PK(const SpectralField& F, int K) {
  if (K > F.grid.N)
    throw std::invalid_argument("projector_PK: K exceeds grid N");
  if (K < 1) throw std::invalid_argument("projector_PK: K must be >= 1");
  const int B_keep = (K % 2 == 1) ? (K - 1) / 2 : K / 2 - 1;
  const int B_out = std::min(B_keep, F.bandwidth());
  SpectralField out(F.grid, 2 * B_out + 1);
  for (int k1 = -B_out; k1 <= B_out; ++k1)
    for (int k2 = -B_out; k2 <= B_out; ++k2) out.at(k1, k2) = F.at(k1, k2);
  return out;
}

// Copy with bandwidth at least B (zero padding outside the original band).
inline SpectralField widen(const SpectralField& F, int B) {
  if (B <= F.bandwidth()) return F;
  SpectralField out(F.grid, 2 * B + 1);
  const int b = F.bandwidth();
  for (int k1 = -b; k1 <= b; ++k1)
    for (int k2 = -b; k2 <= b; ++k2) out.at(k1, k2) = F.at(k1, k2);
  return out;
}

inline SpectralField& add_scaled(SpectralField& acc, const SpectralField& F,
                                 cplx scale) {
  if (F.bandwidth() > acc.bandwidth()) acc = widen(acc, F.bandwidth());
  const int b = F.bandwidth();
  for (int k1 = -b; k1 <= b; ++k1)
    for (int k2 = -b; k2 <= b; ++k2) acc.at(k1, k2) += scale * F.at(k1, k2);
  return acc;
}

// Max |c(-k) - conj(c(k))| over the band; zero for real-valued fields.
inline double hermitian_defect(const SpectralField& F) {
  const int B = F.bandwidth();
  double d = 0;
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2)
      d = std::max(d, std::abs(F.at(-k1, -k2) - std::conj(F.at(k1, k2))));
  return d;
}

}  // namespace pamlab
