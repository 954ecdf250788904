#pragma once

// Lattice geometry for the 2d discrete torus with N sites per axis, N odd.
// Sites are x = eps*l with l integer, |l|_inf <= (N-1)/2, eps = 2*pi/N.
// Fourier modes k live on the same centered square (the mode set).
// Both sites and modes are stored row-major in the canonical centered order
// (first coordinate slow, second fast), which every serializer reuses.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pamlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;

// Relative tolerance for exact algebraic identities at double precision.
inline constexpr double tol_fp = 1e-9;

struct GridSpec {
  int N = 0;

  double epsilon() const { return two_pi / static_cast<double>(N); }
  int half() const { return (N - 1) / 2; }
  long sites() const { return static_cast<long>(N) * N; }

  bool operator==(const GridSpec&) const = default;
};

inline GridSpec make_grid(int N) {
  if (N < 3 || N % 2 == 0)
    throw std::invalid_argument("make_grid: N must be odd and >= 3, got " +
                                std::to_string(N));
  return GridSpec{N};
}

// Row-major index of a centered pair (a1,a2), each in [-h, h], side W = 2h+1.
inline long centered_index(int a1, int a2, int W) {
  const int h = (W - 1) / 2;
  return static_cast<long>(a1 + h) * W + (a2 + h);
}

inline std::array<int, 2> centered_pair(long idx, int W) {
  const int h = (W - 1) / 2;
  return {static_cast<int>(idx / W) - h, static_cast<int>(idx % W) - h};
}

// Representative of k mod N with smallest absolute value; N odd means no tie.
inline int fold_coord(long long k, int N) {
  long long r = k % N;
  if (r > N / 2) r -= N;
  if (r < -(N / 2)) r += N;
  return static_cast<int>(r);
}

inline std::array<int, 2> fold_mode(std::array<long long, 2> k, int N) {
  return {fold_coord(k[0], N), fold_coord(k[1], N)};
}

// Complex values on the N x N lattice, row-major over centered sites.
struct LatticeField {
  GridSpec grid;
  std::vector<cplx> values;

  LatticeField() = default;
  explicit LatticeField(GridSpec g) : grid(g), values(g.sites(), cplx{}) {}

  cplx& at(int l1, int l2) { return values[centered_index(l1, l2, grid.N)]; }
  const cplx& at(int l1, int l2) const {
    return values[centered_index(l1, l2, grid.N)];
  }
};

// Fourier coefficients over the centered square |k|_inf <= bandwidth().
// width == grid.N is the canonical mode-set case; wider fields arise as
// exact products of mode-set fields and stay internal to the calculus.
struct SpectralField {
  GridSpec grid;
  int width = 0;  // odd; coefficient square side = 2*bandwidth+1
  std::vector<cplx> coeffs;

  SpectralField() = default;
  SpectralField(GridSpec g, int w)
      : grid(g), width(w),
        coeffs(static_cast<long>(w) * w, cplx{}) {
    if (w < 1 || w % 2 == 0)
      throw std::invalid_argument("SpectralField: width must be odd >= 1");
  }
  explicit SpectralField(GridSpec g) : SpectralField(g, g.N) {}

  int bandwidth() const { return (width - 1) / 2; }
  bool is_mode_set() const { return width == grid.N; }

  cplx& at(int k1, int k2) { return coeffs[centered_index(k1, k2, width)]; }
  const cplx& at(int k1, int k2) const {
    return coeffs[centered_index(k1, k2, width)];
  }

  // Coefficient lookup treating out-of-band modes as zero.
  cplx coeff_or_zero(int k1, int k2) const {
    const int B = bandwidth();
    if (std::abs(k1) > B || std::abs(k2) > B) return {};
    return at(k1, k2);
  }
};

inline void require_same_grid(const SpectralField& a, const SpectralField& b,
                              const char* who) {
  if (a.grid.N != b.grid.N)
    throw std::invalid_argument(std::string(who) + ": grid mismatch (" +
                                std::to_string(a.grid.N) + " vs " +
                                std::to_string(b.grid.N) + ")");
}

// Max |Im| relative to max |value|; fields representing real data keep this
// below tol_fp.
inline double relative_imag(const std::vector<cplx>& v) {
  double mx = 0, mi = 0;
  for (const auto& z : v) {
    mx = std::max(mx, std::abs(z));
    mi = std::max(mi, std::abs(z.imag()));
  }
  return mx == 0 ? 0.0 : mi / mx;
}

}  // namespace pamlab
