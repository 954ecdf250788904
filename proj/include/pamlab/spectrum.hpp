#pragma once

// The lattice Anderson Hamiltonian H v = -Lap_rw v + eps v eta on the
// unrescaled lattice (so -Lap_rw has eigenvalues eps^2 |k|^2 f(eps k)), its
// k lowest eigenvalues, and the shifted statistics eps^{-2} Lambda_j + c_N.
//
// The iterative solver is Lanczos with full reorthogonalization plus
// locking: each round runs a fresh Krylov sequence orthogonal to everything
// already locked and locks the converged prefix of the sorted Ritz values.
// Locking only prefixes keeps the locked set equal to the bottom of the
// remaining spectrum, and repeated rounds recover degenerate clusters one
// copy at a time. Every reported pair carries an explicitly recomputed
// residual certificate ||Hv - lambda v||.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/potential.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/walk.hpp"

namespace pamlab {

struct HamiltonianOp {
  GridSpec grid;
  WalkMeasure mu;
  std::vector<double> diag;  // eps * eta(i) - mu({0}) contribution folded in apply
  // Per off-zero atom: mass and the folded index permutation i -> i + j.
  std::vector<double> masses;
  std::vector<std::vector<long>> perms;

  long dim() const { return grid.sites(); }

  void apply(const double* in, double* out) const {
    const long n = dim();
    for (long i = 0; i < n; ++i) out[i] = diag[i] * in[i];
    for (size_t a = 0; a < masses.size(); ++a) {
      const double m = masses[a];
      const auto& p = perms[a];
      for (long i = 0; i < n; ++i) out[i] -= m * in[p[i]];
    }
  }
};

inline HamiltonianOp assemble_hamiltonian(const Potential& eta, const WalkMeasure& mu) {
  HamiltonianOp H;
  H.grid = eta.grid;
  H.mu = mu;
  const int N = eta.grid.N;
  const int h = eta.grid.half();
  const double eps = eta.grid.epsilon();
  H.diag.resize(eta.grid.sites());
  for (int l1 = -h; l1 <= h; ++l1)
    for (int l2 = -h; l2 <= h; ++l2)
      H.diag[centered_index(l1, l2, N)] = eps * eta.at(l1, l2) - mu.mass({0, 0});
  for (const auto& [j, m] : mu.atoms) {
    if (j[0] == 0 && j[1] == 0) continue;
    H.masses.push_back(m);
    std::vector<long> perm(eta.grid.sites());
    for (int l1 = -h; l1 <= h; ++l1)
      for (int l2 = -h; l2 <= h; ++l2)
        perm[centered_index(l1, l2, N)] =
            centered_index(fold_coord(l1 + j[0], N), fold_coord(l2 + j[1], N), N);
    H.perms.push_back(std::move(perm));
  }
  return H;
}

inline Eigen::MatrixXd dense_matrix(const HamiltonianOp& H) {
  const long n = H.dim();
  Eigen::MatrixXd M(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (long j = 0; j < n; ++j) {
    e[j] = 1.0;
    H.apply(e.data(), col.data());
    e[j] = 0.0;
    for (long i = 0; i < n; ++i) M(i, j) = col[i];
  }
  return M;
}

// Full diagonalization; the oracle route for small N.
inline std::vector<double> dense_spectrum(const HamiltonianOp& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(H),
                                                    Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + H.dim());
  return out;
}

struct EigenResult {
  std::vector<double> values;     // k smallest, ascending
  std::vector<double> residuals;  // ||H v - lambda v|| per pair, ||v|| = 1
  long matvecs = 0;
  int rounds = 0;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline void orthogonalize(std::vector<double>& w,
                          const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& v : basis) {
      const double c = dot(w, v);
      for (size_t i = 0; i < w.size(); ++i) w[i] -= c * v[i];
    }
}

}  // namespace detail

inline EigenResult lowest_eigenvalues(const HamiltonianOp& H, int k,
                                      double tol = 1e-8) {
  if (k < 1) throw std::invalid_argument("lowest_eigenvalues: k must be >= 1");
  const long n = H.dim();
  if (k > n) throw std::invalid_argument("lowest_eigenvalues: k exceeds the dimension");
  const long budget = 10 * n;

  std::vector<std::vector<double>> locked;
  std::vector<double> locked_vals, locked_res;
  EigenResult result;
  Rng rng(0x6c616e637a6f73ull);
  std::vector<double> warm;  // restart direction carried between rounds

  // One restarted Lanczos round against the current locked space: returns up
  // to `need` certified eigenpairs from the converged prefix of the Ritz
  // values, leaving a warm-start direction when the prefix is short.
  const auto run_round = [&](int need, std::vector<double>& cert_vals,
                             std::vector<std::vector<double>>& cert_vecs,
                             std::vector<double>& cert_res) {
    ++result.rounds;
    cert_vals.clear();
    cert_vecs.clear();
    cert_res.clear();

    std::vector<double> v = warm;
    warm.clear();
    if (v.empty()) {
      v.resize(n);
      for (auto& x : v) x = rng.gaussian();
    }
    detail::orthogonalize(v, locked);
    const double v0n = detail::norm(v);
    if (v0n < 1e-12) return;  // caller retries with a random start
    for (auto& x : v) x /= v0n;

    std::vector<std::vector<double>> V;
    std::vector<double> alpha, beta;
    V.push_back(std::move(v));

    const long m_max =
        std::min({n - static_cast<long>(locked.size()), 150L, budget - result.matvecs});
    std::vector<double> w(n);

    std::vector<double> cand_vals;
    std::vector<std::vector<double>> cand_vecs;

    for (long j = 0; j < m_max; ++j) {
      H.apply(V[j].data(), w.data());
      ++result.matvecs;
      if (j > 0)
        for (long i = 0; i < n; ++i) w[i] -= beta[j - 1] * V[j - 1][i];
      const double a = detail::dot(w, V[j]);
      alpha.push_back(a);
      for (long i = 0; i < n; ++i) w[i] -= a * V[j][i];
      detail::orthogonalize(w, locked);
      detail::orthogonalize(w, V);
      const double b = detail::norm(w);

      const bool breakdown = b < 1e-13 * std::max(1.0, std::abs(a));
      const bool last = breakdown || j + 1 == m_max;
      const long m = j + 1;

      // Ritz extraction: periodically and at the end of the round.
      if (last || (m >= 2 * need && m % 10 == 0)) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (long r = 0; r < m; ++r) {
          T(r, r) = alpha[r];
          if (r + 1 < m) T(r, r + 1) = T(r + 1, r) = beta[r];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const auto& theta = es.eigenvalues();
        const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());

        const auto ritz_vector = [&](long i) {
          std::vector<double> y(n, 0.0);
          for (long r = 0; r < m; ++r) {
            const double c = es.eigenvectors()(r, i);
            for (long q = 0; q < n; ++q) y[q] += c * V[r][q];
          }
          return y;
        };

        // Converged prefix of the sorted Ritz values; locking only prefixes
        // keeps the locked set the bottom of the remaining spectrum.
        cand_vals.clear();
        cand_vecs.clear();
        long first_open = 0;
        for (long i = 0; i < m && static_cast<int>(cand_vals.size()) < need; ++i) {
          const double est =
              breakdown ? 0.0 : std::abs(b * es.eigenvectors()(m - 1, i));
          if (est > 0.1 * tol * scale) break;
          auto y = ritz_vector(i);
          detail::orthogonalize(y, locked);
          detail::orthogonalize(y, cand_vecs);
          const double yn = detail::norm(y);
          first_open = i + 1;
          if (yn < 1e-10) continue;
          for (auto& x : y) x /= yn;
          cand_vals.push_back(theta[i]);
          cand_vecs.push_back(std::move(y));
        }
        const bool enough = static_cast<int>(cand_vals.size()) >= need;
        if (enough || last) {
          if (first_open < m && !breakdown &&
              static_cast<int>(cand_vals.size()) < need)
            warm = ritz_vector(first_open);
          break;
        }
      }
      if (breakdown) break;
      beta.push_back(b);
      for (auto& x : w) x /= b;
      V.push_back(w);
    }

    // Certify with an explicitly recomputed residual.
    for (size_t i = 0; i < cand_vals.size(); ++i) {
      auto& y = cand_vecs[i];
      H.apply(y.data(), w.data());
      ++result.matvecs;
      const double lam = detail::dot(w, y);
      double rr = 0;
      for (long q = 0; q < n; ++q) {
        const double d = w[q] - lam * y[q];
        rr += d * d;
      }
      const double res = std::sqrt(rr);
      if (res <= tol * std::max(1.0, std::abs(lam))) {
        cert_vals.push_back(lam);
        cert_vecs.push_back(std::move(y));
        cert_res.push_back(res);
      }
    }
  };

  const auto fail = [&](const char* phase) {
    std::string msg = "lowest_eigenvalues: no convergence within " +
                      std::to_string(budget) + " applications (" + phase +
                      "); locked " + std::to_string(locked.size()) + " of " +
                      std::to_string(k) + " pairs (residuals:";
    for (double r : locked_res) msg += " " + std::to_string(r);
    msg += ")";
    throw std::runtime_error(msg);
  };

  std::vector<double> vals, res;
  std::vector<std::vector<double>> vecs;

  while (static_cast<int>(locked.size()) < k) {
    if (result.matvecs >= budget) fail("fill");
    run_round(k - static_cast<int>(locked.size()), vals, vecs, res);
    for (size_t i = 0; i < vals.size(); ++i) {
      if (static_cast<int>(locked.size()) >= k) break;
      locked.push_back(std::move(vecs[i]));
      locked_vals.push_back(vals[i]);
      locked_res.push_back(res[i]);
    }
  }

  // Confirmation sweep: a single Krylov start sees one direction per
  // eigenspace, so copies inside a degenerate cluster can be skipped while
  // higher converged pairs fill the quota. Pull in the bottom of the
  // remaining spectrum until it no longer undercuts the current k-th value.
  if (k < n) {
    warm.clear();
    while (true) {
      if (result.matvecs >= budget) fail("confirm");
      run_round(1, vals, vecs, res);
      if (vals.empty()) continue;  // retry; budget guard above terminates
      const size_t top = std::max_element(locked_vals.begin(), locked_vals.end()) -
                         locked_vals.begin();
      if (vals[0] < locked_vals[top] - tol * std::max(1.0, std::abs(vals[0]))) {
        locked[top] = std::move(vecs[0]);
        locked_vals[top] = vals[0];
        locked_res[top] = res[0];
        warm.clear();
      } else {
        break;
      }
    }
  }

  std::vector<size_t> order(locked_vals.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return locked_vals[a] < locked_vals[b]; });
  for (size_t i = 0; i < order.size(); ++i) {
    result.values.push_back(locked_vals[order[i]]);
    result.residuals.push_back(locked_res[order[i]]);
  }
  return result;
}

struct SpectrumSample {
  int N = 0;
  std::uint64_t seed = 0;
  std::vector<double> raw;      // Lambda_1 <= ... <= Lambda_k of H
  std::vector<double> shifted;  // eps^{-2} Lambda_j + c_N
};

inline SpectrumSample spectrum_sample(const Potential& eta, const WalkMeasure& mu,
                                      int k, double tol = 1e-8) {
  const auto H = assemble_hamiltonian(eta, mu);
  const auto eig = lowest_eigenvalues(H, k, tol);
  SpectrumSample s;
  s.N = eta.grid.N;
  s.seed = eta.seed;
  s.raw = eig.values;
  const double inv_e2 = 1.0 / (eta.grid.epsilon() * eta.grid.epsilon());
  const double cN = renorm_constant_cN(eta.grid.N);
  for (double lam : eig.values) s.shifted.push_back(inv_e2 * lam + cN);
  return s;
}

struct SpectrumReport {
  std::vector<int> Ns;
  int k = 0;
  // shifted_values[N index][coordinate j][sample]
  std::vector<std::vector<std::vector<double>>> shifted_values;
  // ks[coordinate][i] between consecutive Ns
  std::vector<std::vector<double>> ks;
  std::vector<bool> ks_trend_nonincreasing;  // per coordinate
  std::vector<double> unshifted_mean_first;  // mean eps^{-2} Lambda_1 per N
  std::vector<double> shifted_mean_first;    // mean shifted Lambda_1 per N
  bool drift_downward = false;
  bool shift_removes_drift = false;
};

inline SpectrumReport spectrum_statistics(const PotentialSpec& spec,
                                          const WalkMeasure& mu,
                                          const std::vector<int>& Ns, int k,
                                          int samples, std::uint64_t seed,
                                          double tol = 1e-8) {
  if (Ns.size() < 3)
    throw std::invalid_argument("spectrum_statistics: needs at least 3 grid sizes");
  if (samples < 200)
    throw std::invalid_argument("spectrum_statistics: needs at least 200 samples");
  SpectrumReport rep;
  rep.Ns = Ns;
  rep.k = k;
  rep.shifted_values.assign(Ns.size(), std::vector<std::vector<double>>(k));
  for (size_t ni = 0; ni < Ns.size(); ++ni) {
    const auto grid = make_grid(Ns[ni]);
    const double inv_e2 = 1.0 / (grid.epsilon() * grid.epsilon());
    RunningMoments unshifted, shifted;
    for (int s = 0; s < samples; ++s) {
      const auto eta = sample_potential(spec, grid,
                                        seed_fanout(seed, "spectrum", grid.N, s));
      const auto sample = spectrum_sample(eta, mu, k, tol);
      for (int j = 0; j < k; ++j)
        rep.shifted_values[ni][j].push_back(sample.shifted[j]);
      unshifted.add(inv_e2 * sample.raw[0]);
      shifted.add(sample.shifted[0]);
    }
    rep.unshifted_mean_first.push_back(unshifted.mean());
    rep.shifted_mean_first.push_back(shifted.mean());
  }
  rep.ks.assign(k, {});
  for (int j = 0; j < k; ++j) {
    for (size_t ni = 0; ni + 1 < Ns.size(); ++ni)
      rep.ks[j].push_back(
          ks_two_sample(rep.shifted_values[ni][j], rep.shifted_values[ni + 1][j]));
    bool mono = true;
    for (size_t i = 0; i + 1 < rep.ks[j].size(); ++i)
      mono = mono && rep.ks[j][i + 1] <= rep.ks[j][i];
    rep.ks_trend_nonincreasing.push_back(mono);
  }
  rep.drift_downward = true;
  rep.shift_removes_drift = true;
  for (size_t ni = 0; ni + 1 < Ns.size(); ++ni) {
    rep.drift_downward =
        rep.drift_downward &&
        rep.unshifted_mean_first[ni + 1] < rep.unshifted_mean_first[ni];
    rep.shift_removes_drift =
        rep.shift_removes_drift &&
        std::abs(rep.shifted_mean_first[ni + 1] - rep.shifted_mean_first[ni]) <
            std::abs(rep.unshifted_mean_first[ni + 1] - rep.unshifted_mean_first[ni]);
  }
  return rep;
}

}  // namespace pamlab
