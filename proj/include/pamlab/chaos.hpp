#pragma once

// Discrete multiple stochastic integrals in the disorder (orders 1 and 2),
// their exact low-moment identities, brute-force small-site moment oracles,
// and the mode-indexed functional that decomposes into site-indexed chaos.
//
// Site enumeration is the potential's storage order. Order-2 kernels are
// hollow (zero diagonal); the symmetrization is cached on construction.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/potential.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/transforms.hpp"

namespace pamlab {

struct ChaosKernel {
  int order = 1;
  int sites = 0;
  std::vector<cplx> f;      // order 1: sites entries; order 2: sites^2 row-major
  std::vector<cplx> f_sym;  // cached symmetrization (order 2); alias of f (order 1)

  cplx at(int a, int b) const { return f[static_cast<size_t>(a) * sites + b]; }
  cplx sym_at(int a, int b) const { return f_sym[static_cast<size_t>(a) * sites + b]; }
};

inline ChaosKernel make_chaos_kernel(int order, int sites, std::vector<cplx> f) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("make_chaos_kernel: order must be 1 or 2");
  const size_t want = order == 1 ? static_cast<size_t>(sites)
                                 : static_cast<size_t>(sites) * sites;
  if (f.size() != want)
    throw std::invalid_argument("make_chaos_kernel: coefficient count mismatch");
  ChaosKernel k;
  k.order = order;
  k.sites = sites;
  k.f = std::move(f);
  if (order == 1) {
    k.f_sym = k.f;
  } else {
    for (int a = 0; a < sites; ++a)
      if (k.at(a, a) != cplx{})
        throw std::invalid_argument("make_chaos_kernel: order-2 kernel must vanish on the diagonal");
    k.f_sym.resize(k.f.size());
    for (int a = 0; a < sites; ++a)
      for (int b = 0; b < sites; ++b)
        k.f_sym[static_cast<size_t>(a) * sites + b] = 0.5 * (k.at(a, b) + k.at(b, a));
  }
  return k;
}

inline double l2_norm_sq(const std::vector<cplx>& v) {
  double s = 0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

// I_1(f) = sum_a f(a) eta(a);  I_2(f) = sum_{a != b} f(a,b) eta(a) eta(b).
inline cplx multiple_integral(const ChaosKernel& k, const Potential& eta) {
  if (static_cast<int>(eta.values.size()) != k.sites)
    throw std::invalid_argument("multiple_integral: enumeration size mismatch");
  if (k.order == 1) {
    cplx acc{};
    for (int a = 0; a < k.sites; ++a) acc += k.f[a] * eta.values[a];
    return acc;
  }
  cplx acc{};
  for (int a = 0; a < k.sites; ++a)
    for (int b = 0; b < k.sites; ++b) {
      if (a == b) continue;
      acc += k.at(a, b) * (eta.values[a] * eta.values[b]);
    }
  return acc;
}

// Martingale-transform form n! sum_{a < b} f_sym(a,b) eta(a) eta(b); equal to
// multiple_integral by symmetrization invariance.
inline cplx multiple_integral_transform(const ChaosKernel& k, const Potential& eta) {
  if (k.order == 1) return multiple_integral(k, eta);
  cplx acc{};
  for (int a = 0; a < k.sites; ++a)
    for (int b = a + 1; b < k.sites; ++b)
      acc += k.sym_at(a, b) * (eta.values[a] * eta.values[b]);
  return 2.0 * acc;
}

// E|I_n(f)|^2 for independent standardized disorder: ||f||^2 (n=1) or
// 2 ||f_sym||^2 (n=2).
inline double exact_second_moment(const ChaosKernel& k) {
  return k.order == 1 ? l2_norm_sq(k.f) : 2.0 * l2_norm_sq(k.f_sym);
}

// Even moments E[eta^{2m}], m = 0..4, for the closed-form base laws
// (all symmetric, so odd moments vanish).
inline std::array<double, 5> even_moments(BaseDistribution base) {
  switch (base) {
    case BaseDistribution::gaussian: return {1, 1, 3, 15, 105};
    case BaseDistribution::rademacher: return {1, 1, 1, 1, 1};
    case BaseDistribution::uniform:
      return {1, 1, 9.0 / 5, 27.0 / 7, 9};
    case BaseDistribution::tabulated: break;
  }
  throw std::invalid_argument("even_moments: no closed form for tabulated law");
}

// Exact E[I_2(f)^4] for a real symmetric hollow kernel by expanding the sum
// over edge 4-tuples; each term factorizes into per-site even moments of the
// (symmetric) base law. Cost O(edges^4), intended for <= 9 sites.
inline double exact_fourth_moment_edges(const ChaosKernel& k,
                                        const std::array<double, 5>& m2m) {
  if (k.order != 2)
    throw std::invalid_argument("exact_fourth_moment_edges: order-2 only");
  struct Edge {
    int a, b;
    double w;
  };
  std::vector<Edge> edges;
  for (int a = 0; a < k.sites; ++a)
    for (int b = a + 1; b < k.sites; ++b) {
      const cplx w = 2.0 * k.sym_at(a, b);
      if (std::abs(w.imag()) > 1e-14)
        throw std::invalid_argument("exact_fourth_moment_edges: real kernels only");
      if (w.real() != 0.0) edges.push_back({a, b, w.real()});
    }
  std::vector<int> deg(k.sites, 0);
  double total = 0;
  const size_t m = edges.size();
  for (size_t e1 = 0; e1 < m; ++e1)
    for (size_t e2 = 0; e2 < m; ++e2)
      for (size_t e3 = 0; e3 < m; ++e3)
        for (size_t e4 = 0; e4 < m; ++e4) {
          const Edge* es[4] = {&edges[e1], &edges[e2], &edges[e3], &edges[e4]};
          bool odd = false;
          for (const Edge* e : es) {
            ++deg[e->a];
            ++deg[e->b];
          }
          double term = es[0]->w * es[1]->w * es[2]->w * es[3]->w;
          for (const Edge* e : es) {
            for (int s : {e->a, e->b}) {
              if (deg[s] == 0) continue;  // already consumed
              if (deg[s] % 2) {
                odd = true;
              } else {
                term *= m2m[deg[s] / 2];
              }
              deg[s] = 0;
            }
          }
          if (!odd) total += term;
        }
  return total;
}

// Gaussian-disorder closed form for the same quantity: with A = f_sym,
// E[(eta^T A eta)^4] = 48 tr(A^4) + 12 (tr A^2)^2 for hollow symmetric A.
inline double exact_fourth_moment_trace(const ChaosKernel& k) {
  if (k.order != 2)
    throw std::invalid_argument("exact_fourth_moment_trace: order-2 only");
  const int n = k.sites;
  auto real_at = [&](int a, int b) {
    const cplx z = k.sym_at(a, b);
    if (std::abs(z.imag()) > 1e-14)
      throw std::invalid_argument("exact_fourth_moment_trace: real kernels only");
    return z.real();
  };
  std::vector<double> A(static_cast<size_t>(n) * n), A2(A.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) A[static_cast<size_t>(a) * n + b] = real_at(a, b);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0;
      for (int c = 0; c < n; ++c)
        s += A[static_cast<size_t>(a) * n + c] * A[static_cast<size_t>(c) * n + b];
      A2[static_cast<size_t>(a) * n + b] = s;
    }
  double tr2 = 0, tr4 = 0;
  for (int a = 0; a < n; ++a) {
    tr2 += A2[static_cast<size_t>(a) * n + a];
    for (int b = 0; b < n; ++b)
      tr4 += A2[static_cast<size_t>(a) * n + b] * A2[static_cast<size_t>(b) * n + a];
  }
  return 48.0 * tr4 + 12.0 * tr2 * tr2;
}

struct MomentReport {
  int order = 0;
  double p = 0;
  double lhs = 0;    // MC estimate of E|I_n(f)|^p
  double rhs = 0;    // ||f||^p * M^n
  double ratio = 0;  // lhs / rhs
  BootstrapCi ci;    // bootstrap CI for lhs
  int samples = 0;
};

inline MomentReport moment_bound_check(const ChaosKernel& k,
                                       const PotentialSpec& spec, GridSpec grid,
                                       double p, int samples,
                                       std::uint64_t seed) {
  if (p < 2) throw std::invalid_argument("moment_bound_check: p must be >= 2");
  if (samples < 500)
    throw std::invalid_argument("moment_bound_check: needs >= 500 samples");
  if (grid.sites() != k.sites)
    throw std::invalid_argument("moment_bound_check: grid does not match kernel sites");
  std::vector<double> draws(samples);
  for (int s = 0; s < samples; ++s) {
    const auto eta =
        sample_potential(spec, grid, seed_fanout(seed, "chaos-moment", grid.N, s));
    draws[s] = std::pow(std::abs(multiple_integral(k, eta)), p);
  }
  MomentReport rep;
  rep.order = k.order;
  rep.p = p;
  rep.lhs = mean_of(draws);
  rep.rhs = std::pow(l2_norm_sq(k.f), p / 2) * std::pow(spec.moment_bound, k.order);
  rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : 0.0;
  rep.ci = bootstrap_ci(draws, [](const std::vector<double>& v) { return mean_of(v); },
                        400, splitmix64(seed ^ 0x9E37u));
  rep.samples = samples;
  return rep;
}

// Mode-indexed order-2 kernel over ModeSet x ModeSet; mode index is the
// SpectralField storage order.
struct FourierKernel2 {
  GridSpec grid;
  std::vector<cplx> F;  // (N^2)^2 row-major

  explicit FourierKernel2(GridSpec g)
      : grid(g), F(static_cast<size_t>(g.sites()) * g.sites(), cplx{}) {}
  cplx& at(int k11, int k12, int k21, int k22) {
    const long i = centered_index(k11, k12, grid.N);
    const long j = centered_index(k21, k22, grid.N);
    return F[static_cast<size_t>(i) * grid.sites() + j];
  }
  cplx at(int k11, int k12, int k21, int k22) const {
    const long i = centered_index(k11, k12, grid.N);
    const long j = centered_index(k21, k22, grid.N);
    return F[static_cast<size_t>(i) * grid.sites() + j];
  }
};

struct FourierChaosReport {
  int order = 0;
  double p = 0;
  double lhs = 0;            // MC estimate of E|G|^{p/n}
  double rhs = 0;            // (sum |F|^2)^{p/(2n)} * M
  double ratio = 0;
  double max_decomp_error = 0;  // per-sample |direct - (offdiag + diagonal)|
  double mc_second_moment = 0;
  double exact_second_moment_site = 0;  // site-kernel prediction of E|G|^2
  BootstrapCi ci;
  int samples = 0;
};

// Order 1: G = sum_k F(k) Fxi(k) = I_1(f) with f(l) = eps sum_k F(k) e^{-i<k,eps l>}.
inline FourierChaosReport fourier_chaos_check_1(const SpectralField& F,
                                                const PotentialSpec& spec,
                                                double p, int samples,
                                                std::uint64_t seed) {
  const GridSpec grid = F.grid;
  if (!F.is_mode_set())
    throw std::invalid_argument("fourier_chaos_check: kernel must live on the mode set");
  const int h = grid.half();
  const double eps = grid.epsilon();
  std::vector<cplx> site(grid.sites(), cplx{});
  for (int l1 = -h; l1 <= h; ++l1)
    for (int l2 = -h; l2 <= h; ++l2) {
      cplx acc{};
      for (int k1 = -h; k1 <= h; ++k1)
        for (int k2 = -h; k2 <= h; ++k2)
          acc += F.at(k1, k2) * std::polar(1.0, -eps * (k1 * l1 + k2 * l2));
      site[centered_index(l1, l2, grid.N)] = eps * acc;
    }
  const auto kern = make_chaos_kernel(1, grid.sites(), site);

  FourierChaosReport rep;
  rep.order = 1;
  rep.p = p;
  rep.exact_second_moment_site = l2_norm_sq(site);
  std::vector<double> draws(samples);
  RunningMoments sq;
  for (int s = 0; s < samples; ++s) {
    const auto eta =
        sample_potential(spec, grid, seed_fanout(seed, "fourier-chaos", grid.N, s));
    const auto xi = build_xi(eta);
    cplx direct{};
    for (int k1 = -h; k1 <= h; ++k1)
      for (int k2 = -h; k2 <= h; ++k2) direct += F.at(k1, k2) * xi.at(k1, k2);
    const cplx via_sites = multiple_integral(kern, eta);
    rep.max_decomp_error = std::max(rep.max_decomp_error, std::abs(direct - via_sites));
    draws[s] = std::pow(std::abs(direct), p);
    sq.add(std::norm(direct));
  }
  rep.lhs = mean_of(draws);
  double l2F = 0;
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) l2F += std::norm(F.at(k1, k2));
  rep.rhs = std::pow(l2F, p / 2) * spec.moment_bound;
  rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : 0;
  rep.mc_second_moment = sq.mean();
  rep.ci = bootstrap_ci(draws, [](const std::vector<double>& v) { return mean_of(v); },
                        400, splitmix64(seed ^ 0x51u));
  rep.samples = samples;
  return rep;
}

// Order 2: G = sum F(k,k') (Fxi(k) Fxi(k') - E[...]) with
// E[Fxi(k) Fxi(k')] = (2pi)^2 1_{k + k' = 0}. The site expansion splits G
// into the off-diagonal chaos I_2 and the diagonal martingale part
// sum_l d(l) (eta(l)^2 - 1); the identity is checked per sample.
inline FourierChaosReport fourier_chaos_check_2(const FourierKernel2& F,
                                                const PotentialSpec& spec,
                                                double p, int samples,
                                                std::uint64_t seed) {
  const GridSpec grid = F.grid;
  const int h = grid.half();
  const int n = grid.sites();
  const double eps = grid.epsilon();

  // Site kernel f2(l1,l2) = eps^2 sum_{k,k'} F e^{-i<k,eps l1>} e^{-i<k',eps l2>},
  // built from the nonzero mode entries only.
  std::vector<cplx> f2(static_cast<size_t>(n) * n, cplx{});
  for (int k11 = -h; k11 <= h; ++k11)
    for (int k12 = -h; k12 <= h; ++k12)
      for (int k21 = -h; k21 <= h; ++k21)
        for (int k22 = -h; k22 <= h; ++k22) {
          const cplx c = F.at(k11, k12, k21, k22);
          if (c == cplx{}) continue;
          for (int l1 = -h; l1 <= h; ++l1)
            for (int l2 = -h; l2 <= h; ++l2) {
              const long i = centered_index(l1, l2, grid.N);
              const cplx ph1 = std::polar(1.0, -eps * (k11 * l1 + k12 * l2));
              for (int m1 = -h; m1 <= h; ++m1)
                for (int m2 = -h; m2 <= h; ++m2) {
                  const long j = centered_index(m1, m2, grid.N);
                  f2[static_cast<size_t>(i) * n + j] +=
                      eps * eps * c * ph1 *
                      std::polar(1.0, -eps * (k21 * m1 + k22 * m2));
                }
            }
        }
  std::vector<cplx> diag(n);
  std::vector<cplx> offdiag = f2;
  for (int i = 0; i < n; ++i) {
    diag[i] = f2[static_cast<size_t>(i) * n + i];
    offdiag[static_cast<size_t>(i) * n + i] = cplx{};
  }
  const auto kern = make_chaos_kernel(2, n, offdiag);

  FourierChaosReport rep;
  rep.order = 2;
  rep.p = p;
  rep.exact_second_moment_site = exact_second_moment(kern);
  std::vector<double> draws(samples);
  RunningMoments sq;
  for (int s = 0; s < samples; ++s) {
    const auto eta =
        sample_potential(spec, grid, seed_fanout(seed, "fourier-chaos", grid.N, s));
    const auto xi = build_xi(eta);
    cplx direct{};
    for (int k11 = -h; k11 <= h; ++k11)
      for (int k12 = -h; k12 <= h; ++k12)
        for (int k21 = -h; k21 <= h; ++k21)
          for (int k22 = -h; k22 <= h; ++k22) {
            const cplx c = F.at(k11, k12, k21, k22);
            if (c == cplx{}) continue;
            cplx prod = xi.at(k11, k12) * xi.at(k21, k22);
            if (k11 + k21 == 0 && k12 + k22 == 0) prod -= cplx{two_pi * two_pi, 0};
            direct += c * prod;
          }
    cplx decomposed = multiple_integral(kern, eta);
    for (int i = 0; i < n; ++i)
      decomposed += diag[i] * (eta.values[i] * eta.values[i] - 1.0);
    rep.max_decomp_error = std::max(rep.max_decomp_error, std::abs(direct - decomposed));
    draws[s] = std::pow(std::abs(direct), p / 2);
    sq.add(std::norm(direct));
  }
  rep.lhs = mean_of(draws);
  rep.rhs = std::pow(l2_norm_sq(F.F), p / 4) * spec.moment_bound;
  rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : 0;
  rep.mc_second_moment = sq.mean();
  rep.ci = bootstrap_ci(draws, [](const std::vector<double>& v) { return mean_of(v); },
                        400, splitmix64(seed ^ 0x52u));
  rep.samples = samples;
  return rep;
}

}  // namespace pamlab
