#pragma once

// Time integration of the renormalized lattice equation
//   d/dt u = Lap_rw u + Pi_N(u xi) - c_N u
// by Strang splitting: the heat half-steps are exact diagonal Fourier
// multipliers, and the potential step is the exact pointwise lattice factor
// e^{dt (xi(l) - c_N)} (by the product identity, lattice multiplication is
// the aliasing-free spectral convolution followed by Pi_N). A Feynman-Kac
// Monte Carlo estimator over rescaled continuous-time walks serves as an
// independent oracle, and convergence studies compare observable laws
// across N.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pamlab/besov.hpp"
#include "pamlab/grid.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/partition.hpp"
#include "pamlab/potential.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/transforms.hpp"
#include "pamlab/walk.hpp"

namespace pamlab {

struct InitialCondition {
  enum class Kind { constant, kronecker, custom };
  Kind kind = Kind::constant;
  double c = 1.0;       // constant value
  double theta = 0.0;   // scaling exponent of the lattice data
  std::optional<SpectralField> field;

  static InitialCondition constant(double value) {
    InitialCondition ic;
    ic.kind = Kind::constant;
    ic.c = value;
    ic.theta = 0.0;
    return ic;
  }
  // v0(i) = delta_{i,0}; u0 = eps^{-2} E_N(delta), theta = -2. Its transform
  // is identically 1 on the mode set.
  static InitialCondition kronecker_delta() {
    InitialCondition ic;
    ic.kind = Kind::kronecker;
    ic.theta = -2.0;
    return ic;
  }
  static InitialCondition custom(SpectralField F) {
    InitialCondition ic;
    ic.kind = Kind::custom;
    ic.field = std::move(F);
    return ic;
  }

  SpectralField build(GridSpec grid) const {
    switch (kind) {
      case Kind::constant: {
        SpectralField F(grid);
        F.at(0, 0) = cplx{two_pi * two_pi * c, 0.0};
        return F;
      }
      case Kind::kronecker: {
        SpectralField F(grid);
        for (auto& z : F.coeffs) z = cplx{1.0, 0.0};
        return F;
      }
      case Kind::custom: {
        if (!field) throw std::invalid_argument("initial condition: missing custom field");
        if (field->grid.N != grid.N)
          throw std::invalid_argument("initial condition: grid mismatch");
        if (!field->is_mode_set())
          throw std::invalid_argument("initial condition: custom field exceeds the mode set");
        return widen(*field, grid.half());
      }
    }
    throw std::invalid_argument("initial condition: unknown kind");
  }
};

struct DtPolicy {
  double dt = 0.0;                 // > 0 forces this step (pre-rounding)
  double stability_fraction = 0.1; // dt * ||xi||_inf <= this when auto
  double max_dt = 0.05;
  double blow_up_cap = 1e12;
};

struct PamTrajectory {
  GridSpec grid;
  std::vector<double> times;
  std::vector<SpectralField> states;
  double dt = 0;
  long steps = 0;
  double c_N = 0;

  explicit PamTrajectory(GridSpec g) : grid(g) {}

  const SpectralField& state_at(double t) const {
    for (size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t)))
        return states[i];
    throw std::invalid_argument("trajectory: time " + std::to_string(t) + " not recorded");
  }
};

namespace detail {

// e^{-t |k|^2 f(eps k)} table in SpectralField storage order (ModeSet width).
inline std::vector<double> heat_multiplier(GridSpec grid, const WalkMeasure& mu,
                                           double t) {
  const int h = grid.half();
  const double eps = grid.epsilon();
  std::vector<double> m(grid.sites());
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      const double k2norm = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
      m[centered_index(k1, k2, grid.N)] =
          std::exp(-t * k2norm * multiplier_f(eps * k1, eps * k2, mu));
    }
  return m;
}

}  // namespace detail

inline PamTrajectory solve_pam(const EnhancedNoise& en, const InitialCondition& ic,
                               double T, DtPolicy policy = {},
                               std::vector<double> save_times = {}) {
  if (!(T > 0)) throw std::invalid_argument("solve_pam: T must be positive");
  if (policy.dt < 0) throw std::invalid_argument("solve_pam: dt must be positive");
  const GridSpec grid = en.grid;

  // Potential on the lattice: xi(l) - c_N (xi is real for real disorder).
  const auto xi_lat = idft_lattice(en.xi);
  std::vector<double> pot(xi_lat.values.size());
  double xi_inf = 0;
  for (size_t i = 0; i < pot.size(); ++i) {
    pot[i] = xi_lat.values[i].real() - en.c_N;
    xi_inf = std::max(xi_inf, std::abs(xi_lat.values[i].real()));
  }

  double dt0 = policy.dt;
  if (dt0 == 0.0)
    dt0 = std::min(policy.max_dt,
                   policy.stability_fraction / std::max(xi_inf, 1e-12));

  if (save_times.empty()) save_times = {0.0, T};
  std::sort(save_times.begin(), save_times.end());
  save_times.erase(std::unique(save_times.begin(), save_times.end()), save_times.end());
  if (save_times.front() != 0.0) save_times.insert(save_times.begin(), 0.0);
  if (save_times.back() < T) save_times.push_back(T);
  if (save_times.back() > T)
    throw std::invalid_argument("solve_pam: save time beyond horizon");

  PamTrajectory traj(grid);
  traj.c_N = en.c_N;
  traj.dt = dt0;

  SpectralField u = ic.build(grid);
  traj.times.push_back(0.0);
  traj.states.push_back(u);

  double now = 0.0;
  for (size_t seg = 1; seg < save_times.size(); ++seg) {
    const double span = save_times[seg] - now;
    const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt0 - 1e-12)));
    const double dt = span / steps;
    const auto half = detail::heat_multiplier(grid, en.mu, 0.5 * dt);
    std::vector<double> pot_exp(pot.size());
    for (size_t i = 0; i < pot.size(); ++i) pot_exp[i] = std::exp(dt * pot[i]);
    for (long s = 0; s < steps; ++s) {
      for (size_t i = 0; i < u.coeffs.size(); ++i) u.coeffs[i] *= half[i];
      LatticeField v = idft_lattice(u);
      double vmax = 0;
      for (size_t i = 0; i < v.values.size(); ++i) {
        v.values[i] *= pot_exp[i];
        vmax = std::max(vmax, std::abs(v.values[i]));
      }
      if (vmax > policy.blow_up_cap)
        throw std::runtime_error("solve_pam: blow-up at t = " +
                                 std::to_string(now + (s + 1) * dt));
      u = dft_lattice(v);
      for (size_t i = 0; i < u.coeffs.size(); ++i) u.coeffs[i] *= half[i];
      ++traj.steps;
    }
    now = save_times[seg];
    traj.times.push_back(now);
    traj.states.push_back(u);
  }
  return traj;
}

struct FkEstimate {
  double mean = 0;
  double se = 0;
  long n_paths = 0;
};

// u(t, x) = E_x[ u0(B_t) exp(int_0^t xi(B_s) ds) ] e^{-c_N t} over the
// rescaled walk (jump rate eps^{-2} lambda, steps from mu). xi on the
// lattice is eps^{-1} eta.
inline FkEstimate feynman_kac_estimate(const Potential& eta, const WalkMeasure& mu,
                                       const InitialCondition& ic, double t,
                                       std::array<int, 2> x, long n_paths,
                                       std::uint64_t seed, double c_N) {
  if (!(t > 0)) throw std::invalid_argument("feynman_kac_estimate: t must be positive");
  if (n_paths < 2) throw std::invalid_argument("feynman_kac_estimate: needs >= 2 paths");
  const GridSpec grid = eta.grid;
  const double eps = grid.epsilon();
  const double rate = mu.jump_rate() / (eps * eps);
  if (!(rate > 0)) throw std::invalid_argument("feynman_kac_estimate: degenerate walk");

  std::vector<std::array<int, 2>> jumps;
  std::vector<double> weights;
  double total = 0;
  for (const auto& [j, m] : mu.atoms) {
    if (j[0] == 0 && j[1] == 0) continue;
    jumps.push_back(j);
    weights.push_back(m);
    total += m;
  }

  std::optional<SpectralField> custom;
  if (ic.kind == InitialCondition::Kind::custom) custom = ic.build(grid);

  RunningMoments acc;
  for (long p = 0; p < n_paths; ++p) {
    Rng rng(seed_fanout(seed, "feynman-kac", grid.N, p));
    int c1 = x[0], c2 = x[1];
    double s = 0, w = 0;
    while (true) {
      const double tau = rng.exponential(rate);
      const double stay = std::min(tau, t - s);
      w += (eta.at(c1, c2) / eps) * stay;
      s += tau;
      if (s >= t) break;
      const int pick = rng.categorical(weights.data(), static_cast<int>(weights.size()), total);
      c1 = fold_coord(c1 + jumps[pick][0], grid.N);
      c2 = fold_coord(c2 + jumps[pick][1], grid.N);
    }
    double u0;
    switch (ic.kind) {
      case InitialCondition::Kind::constant: u0 = ic.c; break;
      case InitialCondition::Kind::kronecker:
        u0 = (c1 == 0 && c2 == 0) ? 1.0 / (eps * eps) : 0.0;
        break;
      default:
        u0 = extension_eval(*custom, eps * c1, eps * c2).real();
    }
    acc.add(u0 * std::exp(w - c_N * t));
  }
  return {acc.mean(), acc.se_mean(), n_paths};
}

struct ConvergenceReport {
  std::vector<int> Ns;
  std::vector<std::string> names;
  // values[observable][N index][sample]
  std::vector<std::vector<std::vector<double>>> values;
  // ks[observable][i] = KS distance between laws at Ns[i] and Ns[i+1]
  std::vector<std::vector<double>> ks;
  std::vector<std::vector<double>> means;  // [observable][N index]
};

// Per N: `samples` independent disorder draws, solve to T, record scalar
// observables, compare consecutive-N empirical laws by KS distance.
inline ConvergenceReport convergence_study(const PotentialSpec& spec,
                                           const WalkMeasure& mu,
                                           const DyadicPartition& part,
                                           const std::vector<int>& Ns, double T,
                                           int samples, std::uint64_t seed,
                                           bool renormalize = true,
                                           const InitialCondition& ic =
                                               InitialCondition::constant(1.0)) {
  if (Ns.size() < 3)
    throw std::invalid_argument("convergence_study: needs at least 3 grid sizes");
  ConvergenceReport rep;
  rep.Ns = Ns;
  rep.names = {"spatial_average", "point_value_00", "besov_b01inf"};
  rep.values.assign(rep.names.size(), {});
  for (auto& per_obs : rep.values) per_obs.assign(Ns.size(), {});

  for (size_t ni = 0; ni < Ns.size(); ++ni) {
    const auto grid = make_grid(Ns[ni]);
    for (int s = 0; s < samples; ++s) {
      const auto eta = sample_potential(
          spec, grid, seed_fanout(seed, "pam-convergence", grid.N, s));
      EnhancedNoise en(grid);
      en.mu = mu;
      en.xi = build_xi(eta);
      en.c_N = renormalize ? renorm_constant_cN(grid.N) : 0.0;
      const auto traj = solve_pam(en, ic, T);
      const auto& u = traj.states.back();
      rep.values[0][ni].push_back(u.at(0, 0).real() / (two_pi * two_pi));
      rep.values[1][ni].push_back(extension_eval(u, 0.0, 0.0).real());
      rep.values[2][ni].push_back(besov_norm(part, u, 0.0, 1, inf));
    }
  }
  rep.ks.assign(rep.names.size(), {});
  rep.means.assign(rep.names.size(), {});
  for (size_t o = 0; o < rep.names.size(); ++o) {
    for (size_t ni = 0; ni < Ns.size(); ++ni)
      rep.means[o].push_back(mean_of(rep.values[o][ni]));
    for (size_t ni = 0; ni + 1 < Ns.size(); ++ni)
      rep.ks[o].push_back(ks_two_sample(rep.values[o][ni], rep.values[o][ni + 1]));
  }
  return rep;
}

}  // namespace pamlab
