#pragma once

// Semi-discrete polymer measure on continuous-time walk paths: importance
// weights exp(int_0^T xi(B_s) ds), and the equivalent kernel representation
//   K_T(s,t) f(x) = u^{f,T-t}(t-s, x) / u^1(T-s, x),
// where u^1 solves the renormalized equation from constant 1 and u^{f,T-t}
// solves it from f * u^1(T-t, .). The renormalization factors cancel exactly
// in the ratio because the durations add: (t-s) + (T-t) = T-s. The partition
// function never appears; it cancels the same way and is estimated only on
// the Monte Carlo side as the mean weight.
//
// Numerically the ratio solves share one step size: the numerator reuses the
// exact step the denominator trajectory used on [T-t, T-s], so for f = 1 the
// two Strang factor products are identical and K(s,t)1 = 1 to roundoff.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/pam.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/transforms.hpp"
#include "pamlab/walk.hpp"

namespace pamlab {

struct CtrwPath {
  std::array<int, 2> start{0, 0};
  std::vector<double> jump_times;                 // strictly increasing, in (0, T)
  std::vector<std::array<int, 2>> displacements;  // one per jump, from supp mu \ {0}
  double T = 0;

  // Folded site occupied at time t (right-continuous).
  std::array<int, 2> site_at(double t, int N) const {
    long long a = start[0], b = start[1];
    for (size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i) {
      a += displacements[i][0];
      b += displacements[i][1];
    }
    return {fold_coord(a, N), fold_coord(b, N)};
  }
};

namespace detail {

struct JumpLaw {
  std::vector<std::array<int, 2>> jumps;
  std::vector<double> weights;
  double total = 0;
  double rate = 0;  // lattice rate lambda

  explicit JumpLaw(const WalkMeasure& mu) {
    for (const auto& [j, m] : mu.atoms) {
      if (j[0] == 0 && j[1] == 0) continue;
      jumps.push_back(j);
      weights.push_back(m);
      total += m;
    }
    rate = mu.jump_rate();
    if (!(rate > 0)) throw std::invalid_argument("ctrw: degenerate jump rate");
  }
};

}  // namespace detail

// Rescaled dynamics: exponential holding times with rate eps^{-2} lambda,
// displacements drawn proportionally to mu({j}).
inline CtrwPath sample_ctrw(const WalkMeasure& mu, GridSpec grid,
                            std::array<int, 2> x0, double T, Rng& rng) {
  if (T < 0) throw std::invalid_argument("sample_ctrw: negative horizon");
  const detail::JumpLaw law(mu);
  const double eps = grid.epsilon();
  CtrwPath path;
  path.start = x0;
  path.T = T;
  double s = 0;
  while (true) {
    s += rng.exponential(law.rate / (eps * eps));
    if (s >= T) break;
    const int pick = rng.categorical(law.weights.data(),
                                     static_cast<int>(law.weights.size()), law.total);
    path.jump_times.push_back(s);
    path.displacements.push_back(law.jumps[pick]);
  }
  return path;
}

// exp(int_0^T xi(B_s) ds): the integrand is piecewise constant between
// jumps, so the integral is an exact finite sum.
inline double path_weight(const CtrwPath& path, const LatticeField& xi) {
  const int N = xi.grid.N;
  long long a = path.start[0], b = path.start[1];
  double acc = 0, prev = 0;
  for (size_t i = 0; i < path.jump_times.size(); ++i) {
    acc += xi.at(fold_coord(a, N), fold_coord(b, N)).real() * (path.jump_times[i] - prev);
    prev = path.jump_times[i];
    a += path.displacements[i][0];
    b += path.displacements[i][1];
  }
  acc += xi.at(fold_coord(a, N), fold_coord(b, N)).real() * (path.T - prev);
  return std::exp(acc);
}

struct PolymerKernelQuery {
  double s = 0;
  double t = 0;
  double T = 0;
  LatticeField f;
};

namespace detail {

// Spectral data of the lattice indicator of site x: F(k) = eps^2 e^{-i<k,eps x>}.
inline SpectralField indicator_spectral(GridSpec grid, std::array<int, 2> x) {
  SpectralField F(grid);
  const int h = grid.half();
  const double eps = grid.epsilon();
  const double e2 = eps * eps;
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      const double ph = -(k1 * (eps * x[0]) + k2 * (eps * x[1]));
      F.at(k1, k2) = cplx{e2 * std::cos(ph), e2 * std::sin(ph)};
    }
  return F;
}

inline void require_positive(const LatticeField& u, const char* what) {
  for (const auto& z : u.values)
    if (!(z.real() > 0))
      throw std::runtime_error(std::string("polymer: degenerate measure, ") + what +
                               " is not strictly positive");
}

// Step size solve_pam will use on a span when asked for pre-rounding step dt0.
inline double rounded_dt(double span, double dt0) {
  const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt0 - 1e-12)));
  return span / steps;
}

}  // namespace detail

inline LatticeField transition_kernel(const EnhancedNoise& en,
                                      const PolymerKernelQuery& q,
                                      DtPolicy policy = {}) {
  if (!(0 <= q.s && q.s <= q.t && q.t <= q.T) || !(q.T > 0))
    throw std::invalid_argument("transition_kernel: needs 0 <= s <= t <= T, T > 0");
  if (q.f.grid.N != en.grid.N)
    throw std::invalid_argument("transition_kernel: grid mismatch");

  // Denominator trajectory u^1 on [0, T-s], recorded at T-t and T-s.
  const auto traj1 = solve_pam(en, InitialCondition::constant(1.0), q.T - q.s, policy,
                               {q.T - q.t, q.T - q.s});
  const auto den = idft_lattice(traj1.state_at(q.T - q.s));
  detail::require_positive(den, "u^1(T-s)");

  if (q.t == q.s) {
    LatticeField out = q.f;  // K(s,s) is the identity
    return out;
  }

  const auto u1_mid = idft_lattice(traj1.state_at(q.T - q.t));
  LatticeField init(en.grid);
  for (size_t i = 0; i < init.values.size(); ++i)
    init.values[i] = q.f.values[i].real() * u1_mid.values[i].real();

  // Reuse the exact step the u^1 solve took on [T-t, T-s] so the factor
  // products align and K(s,t)1 telescopes to 1.
  double dt0 = policy.dt;
  if (dt0 == 0.0) dt0 = traj1.dt;
  DtPolicy num_policy = policy;
  num_policy.dt = detail::rounded_dt(q.t - q.s, dt0);

  const auto traj_num = solve_pam(en, InitialCondition::custom(dft_lattice(init)),
                                  q.t - q.s, num_policy);
  const auto num = idft_lattice(traj_num.states.back());

  LatticeField out(en.grid);
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = num.values[i].real() / den.values[i].real();
  return out;
}

// Marginal law of the path position at time t under the polymer measure with
// horizon T started at x. Equals y -> K_T(0,t) 1_y (x); computed from one
// forward solve out of the indicator at x using the symmetry of the Strang
// propagator (a palindrome of symmetric factors), then normalized.
inline std::vector<double> polymer_marginal(const EnhancedNoise& en,
                                            std::array<int, 2> x, double t, double T,
                                            DtPolicy policy = {}) {
  if (!(0 < t && t <= T)) throw std::invalid_argument("polymer_marginal: needs 0 < t <= T");
  const auto traj1 = solve_pam(en, InitialCondition::constant(1.0), T, policy,
                               {T - t, T});
  detail::require_positive(idft_lattice(traj1.state_at(T)), "u^1(T)");
  const auto u1_mid = idft_lattice(traj1.state_at(T - t));

  DtPolicy fwd = policy;
  if (fwd.dt == 0.0) fwd.dt = traj1.dt;
  const auto trajv = solve_pam(
      en, InitialCondition::custom(detail::indicator_spectral(en.grid, x)), t, fwd);
  const auto v = idft_lattice(trajv.states.back());

  std::vector<double> q(v.values.size());
  double total = 0;
  for (size_t i = 0; i < q.size(); ++i) {
    q[i] = v.values[i].real() * u1_mid.values[i].real();
    total += q[i];
  }
  if (!(total > 0))
    throw std::runtime_error("polymer: degenerate measure, marginal mass is not positive");
  for (auto& p : q) p = std::max(0.0, p / total);
  return q;
}

// Sequential kernel sampling of the polymer path on a user-supplied time
// grid: x_{t_1} ~ K(0,t_1)(x, .), then x_{t_2} ~ K(t_1,t_2)(x_{t_1}, .), ...
inline std::vector<std::array<int, 2>> sample_kernel_path(
    const EnhancedNoise& en, std::array<int, 2> x0, const std::vector<double>& times,
    double T, Rng& rng, DtPolicy policy = {}) {
  for (size_t i = 0; i < times.size(); ++i)
    if (!(times[i] > (i ? times[i - 1] : 0.0)) || times[i] > T)
      throw std::invalid_argument("sample_kernel_path: times must increase within (0, T]");
  const int N = en.grid.N;
  const int h = en.grid.half();
  std::vector<std::array<int, 2>> sites;
  std::array<int, 2> cur = x0;
  double prev = 0;
  for (double t : times) {
    // Conditional one-step law: q(y) proportional to [S_{t-prev} 1_cur](y) u^1(T-t, y).
    const auto traj1 = solve_pam(en, InitialCondition::constant(1.0),
                                 std::max(T - prev, t - prev), policy, {T - t});
    const auto u1_mid = idft_lattice(traj1.state_at(T - t));
    DtPolicy fwd = policy;
    if (fwd.dt == 0.0) fwd.dt = traj1.dt;
    const auto trajv = solve_pam(
        en, InitialCondition::custom(detail::indicator_spectral(en.grid, cur)),
        t - prev, fwd);
    const auto v = idft_lattice(trajv.states.back());
    std::vector<double> w(v.values.size());
    double total = 0;
    for (size_t i = 0; i < w.size(); ++i) {
      w[i] = std::max(0.0, v.values[i].real() * u1_mid.values[i].real());
      total += w[i];
    }
    if (!(total > 0))
      throw std::runtime_error("polymer: degenerate measure in kernel sampling");
    const long idx = rng.categorical(w.data(), static_cast<int>(w.size()), total);
    const int l1 = static_cast<int>(idx / N) - h;
    const int l2 = static_cast<int>(idx % N) - h;
    cur = {l1, l2};
    sites.push_back(cur);
    prev = t;
  }
  return sites;
}

struct McKernelReport {
  std::vector<double> times;
  std::vector<double> tv;             // per time: TV(weighted MC, kernel)
  std::vector<BootstrapCi> tv_ci;     // bootstrap over path resampling
  std::vector<std::vector<double>> mc_marginals;      // [time][site]
  std::vector<std::vector<double>> kernel_marginals;  // [time][site]
  double ess = 0;                     // (sum w)^2 / sum w^2
  double mean_weight = 0;             // the partition-function estimate
  bool low_ess_warning = false;
  long n_paths = 0;
};

// Importance-weighted CTRW marginals against the kernel marginals. The
// weights are the raw path weights; normalizing by their sum estimates the
// partition function and removes it, matching the kernel side where it
// cancels algebraically.
inline McKernelReport mc_vs_kernel_check(const EnhancedNoise& en, std::array<int, 2> x,
                                         double T, const std::vector<double>& times,
                                         long n_paths, std::uint64_t seed,
                                         DtPolicy policy = {}, int bootstrap = 200) {
  if (!(T > 0)) throw std::invalid_argument("mc_vs_kernel_check: T must be positive");
  if (n_paths < 2) throw std::invalid_argument("mc_vs_kernel_check: needs >= 2 paths");
  for (size_t i = 0; i < times.size(); ++i)
    if (!(times[i] > (i ? times[i - 1] : 0.0)) || times[i] > T)
      throw std::invalid_argument("mc_vs_kernel_check: times must increase within (0, T]");

  const GridSpec grid = en.grid;
  const long M = grid.sites();
  const auto xi_lat = idft_lattice(en.xi);

  McKernelReport rep;
  rep.times = times;
  rep.n_paths = n_paths;

  // Per-path weight and site index at each requested time.
  std::vector<double> w(n_paths);
  std::vector<std::vector<long>> pos(times.size(), std::vector<long>(n_paths));
  double sw = 0, sw2 = 0;
  for (long p = 0; p < n_paths; ++p) {
    Rng rng(seed_fanout(seed, "polymer-path", grid.N, p));
    const auto path = sample_ctrw(en.mu, grid, x, T, rng);
    w[p] = path_weight(path, xi_lat);
    sw += w[p];
    sw2 += w[p] * w[p];
    for (size_t m = 0; m < times.size(); ++m) {
      const auto site = path.site_at(times[m], grid.N);
      pos[m][p] = centered_index(site[0], site[1], grid.N);
    }
  }
  rep.mean_weight = sw / n_paths;
  rep.ess = sw * sw / sw2;
  rep.low_ess_warning = rep.ess < 50;

  for (size_t m = 0; m < times.size(); ++m) {
    std::vector<double> mc(M, 0.0);
    for (long p = 0; p < n_paths; ++p) mc[pos[m][p]] += w[p];
    for (auto& v : mc) v /= sw;
    const auto ker = polymer_marginal(en, x, times[m], T, policy);
    rep.mc_marginals.push_back(mc);
    rep.kernel_marginals.push_back(ker);
    rep.tv.push_back(tv_distance(mc, ker));

    // Bootstrap the TV over path resampling.
    std::vector<double> reps(bootstrap);
    Rng brng(splitmix64(seed ^ 0x706f6c79ull));
    std::vector<double> bmc(M);
    for (int b = 0; b < bootstrap; ++b) {
      std::fill(bmc.begin(), bmc.end(), 0.0);
      double bsw = 0;
      for (long p = 0; p < n_paths; ++p) {
        const long pick = static_cast<long>(brng.bits() % static_cast<std::uint64_t>(n_paths));
        bmc[pos[m][pick]] += w[pick];
        bsw += w[pick];
      }
      for (auto& v : bmc) v /= bsw;
      reps[b] = tv_distance(bmc, ker);
    }
    std::sort(reps.begin(), reps.end());
    const auto pick_q = [&](double q) {
      const double idx = q * (bootstrap - 1);
      const long lo = static_cast<long>(idx);
      const long hi = std::min<long>(lo + 1, bootstrap - 1);
      return reps[lo] + (idx - lo) * (reps[hi] - reps[lo]);
    };
    BootstrapCi ci;
    ci.point = rep.tv.back();
    ci.low = pick_q(0.025);
    ci.high = pick_q(0.975);
    rep.tv_ci.push_back(ci);
  }
  return rep;
}

}  // namespace pamlab
