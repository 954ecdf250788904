#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "pamlab/noise.hpp"
#include "pamlab/pam.hpp"
#include "pamlab/partition.hpp"
#include "pamlab/potential.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/transforms.hpp"
#include "pamlab/walk.hpp"

#include "helpers.hpp"

using namespace pamlab;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

// Enhanced noise whose potential term is identically zero and whose
// renormalization constant is zero: the equation reduces to the heat flow.
EnhancedNoise heat_only_noise(GridSpec grid) {
  EnhancedNoise en(grid);
  en.mu = nearest_neighbor_walk();
  en.c_N = 0.0;
  en.c_tilde_N = 0.0;
  return en;
}

EnhancedNoise constant_potential_noise(GridSpec grid, double value) {
  Potential eta(grid);
  for (auto& v : eta.values) v = value;
  EnhancedNoise en(grid);
  en.mu = nearest_neighbor_walk();
  en.xi = build_xi(eta);
  en.c_N = 0.0;
  return en;
}

}  // namespace

TEST_CASE("heat multiplier matches the walk symbol") {
  const auto grid = make_grid(9);
  const auto mu = nearest_neighbor_walk();
  const double t = 0.37, eps = grid.epsilon();
  const auto m = detail::heat_multiplier(grid, mu, t);
  for (int k1 : {-4, -1, 0, 2})
    for (int k2 : {-3, 0, 4}) {
      const double k2n = double(k1) * k1 + double(k2) * k2;
      const double want = std::exp(-t * k2n * multiplier_f(eps * k1, eps * k2, mu));
      CHECK(m[centered_index(k1, k2, 9)] == Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("pure heat flow decays each mode by its exact symbol") {
  const auto grid = make_grid(9);
  const auto en = heat_only_noise(grid);
  const double eps = grid.epsilon();

  SpectralField F(grid);
  F.at(2, -1) = cplx{1.0, 0.0};
  F.at(-2, 1) = cplx{1.0, 0.0};  // keep the field real
  const double T = 0.8;
  const auto traj = solve_pam(en, InitialCondition::custom(F), T, {}, {});
  const auto& u = traj.state_at(T);
  const double sym = 5.0 * multiplier_f(2 * eps, -eps, en.mu);
  CHECK(u.at(2, -1).real() == Approx(std::exp(-T * sym)).epsilon(1e-12));
  CHECK(u.at(-2, 1).real() == Approx(std::exp(-T * sym)).epsilon(1e-12));
  double rest = 0;
  for (int k1 = -4; k1 <= 4; ++k1)
    for (int k2 = -4; k2 <= 4; ++k2)
      if (!(std::abs(k1) == 2 && std::abs(k2) == 1))
        rest = std::max(rest, std::abs(u.at(k1, k2)));
  CHECK(rest <= 1e-14);
}

TEST_CASE("constant potential integrates to a pure exponential") {
  const auto grid = make_grid(7);
  const double s = 2.3;  // potential value after the eps^{-1} rescaling
  auto en = constant_potential_noise(grid, s * grid.epsilon());
  const double T = 0.6;
  const auto traj = solve_pam(en, InitialCondition::constant(1.0), T, {}, {0.3});
  for (double t : {0.3, 0.6}) {
    const auto lat = idft_lattice(traj.state_at(t));
    for (const auto& z : lat.values) {
      CHECK(z.real() == Approx(std::exp(s * t)).epsilon(1e-12));
      CHECK(std::abs(z.imag()) <= 1e-12);
    }
  }
  // A nonzero c_N shifts the growth rate down by exactly c_N.
  en.c_N = 1.1;
  const auto shifted = solve_pam(en, InitialCondition::constant(1.0), T, {}, {});
  const auto lat = idft_lattice(shifted.state_at(T));
  CHECK(lat.values[0].real() == Approx(std::exp((s - 1.1) * T)).epsilon(1e-12));
}

TEST_CASE("solver matches the dense matrix exponential at N = 5") {
  const auto grid = make_grid(5);
  const auto part = build_partition();
  const auto eta = sample_potential(PotentialSpec{}, grid, 23);
  const auto en = enhanced_noise(eta, part);
  const int n = grid.sites();
  const int h = grid.half();
  const double eps = grid.epsilon();

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (int x1 = -h; x1 <= h; ++x1)
    for (int x2 = -h; x2 <= h; ++x2) {
      const long row = centered_index(x1, x2, grid.N);
      for (const auto& [j, m] : en.mu.atoms) {
        const long col = centered_index(fold_coord(x1 + j[0], grid.N),
                                        fold_coord(x2 + j[1], grid.N), grid.N);
        G(row, col) += m / (eps * eps);
      }
      G(row, row) += eta.at(x1, x2) / eps - en.c_N;
    }
  REQUIRE((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  const double T = 0.1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  Eigen::VectorXd u0 = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd uT =
      es.eigenvectors() *
      (es.eigenvalues().array() * T).exp().matrix().asDiagonal() *
      (es.eigenvectors().transpose() * u0);

  DtPolicy policy;
  policy.dt = 2.5e-4;
  const auto traj = solve_pam(en, InitialCondition::constant(1.0), T, policy, {});
  const auto lat = idft_lattice(traj.state_at(T));
  double scale = uT.cwiseAbs().maxCoeff(), err = 0;
  for (int x1 = -h; x1 <= h; ++x1)
    for (int x2 = -h; x2 <= h; ++x2)
      err = std::max(err, std::abs(lat.at(x1, x2).real() -
                                   uT(centered_index(x1, x2, grid.N))));
  CHECK(err <= 1e-6 * scale);
}

TEST_CASE("splitting error shrinks at second order") {
  const auto grid = make_grid(9);
  const auto part = build_partition();
  const auto en = enhanced_noise(sample_potential(PotentialSpec{}, grid, 31), part);
  const double T = 0.25;

  auto value_at = [&](double dt) {
    DtPolicy policy;
    policy.dt = dt;
    const auto traj = solve_pam(en, InitialCondition::constant(1.0), T, policy, {});
    return traj.state_at(T).at(0, 0).real();
  };
  const double a = value_at(0.01), b = value_at(0.005), c = value_at(0.0025);
  const double ratio = (a - b) / (b - c);
  CAPTURE(a, b, c, ratio);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("flow is linear in the initial condition") {
  const auto grid = make_grid(9);
  const auto part = build_partition();
  const auto en = enhanced_noise(sample_potential(PotentialSpec{}, grid, 41), part);
  const auto F = dft_lattice(testutil::random_real_field(grid, 1));
  const auto Gf = dft_lattice(testutil::random_real_field(grid, 2));
  const double a = 0.8, b = -1.9, T = 0.3;
  DtPolicy policy;
  policy.dt = 0.01;

  SpectralField mix(grid);
  add_scaled(mix, F, a);
  add_scaled(mix, Gf, b);
  const auto um = solve_pam(en, InitialCondition::custom(mix), T, policy, {}).state_at(T);
  const auto uf = solve_pam(en, InitialCondition::custom(F), T, policy, {}).state_at(T);
  const auto ug = solve_pam(en, InitialCondition::custom(Gf), T, policy, {}).state_at(T);
  SpectralField lin(grid);
  add_scaled(lin, uf, a);
  add_scaled(lin, ug, b);
  double scale = 0;
  for (const auto& z : um.coeffs) scale = std::max(scale, std::abs(z));
  CHECK(testutil::max_coeff_diff(um, lin) <= 1e-12 * scale);
}

TEST_CASE("restarting from a saved state reproduces the trajectory") {
  const auto grid = make_grid(9);
  const auto part = build_partition();
  const auto en = enhanced_noise(sample_potential(PotentialSpec{}, grid, 47), part);
  const double T = 0.5;
  DtPolicy policy;
  policy.dt = T / 64;

  const auto full = solve_pam(en, InitialCondition::constant(1.0), T, policy, {T / 2});
  const auto tail = solve_pam(en, InitialCondition::custom(full.state_at(T / 2)),
                              T / 2, policy, {});
  double scale = 0;
  for (const auto& z : full.state_at(T).coeffs) scale = std::max(scale, std::abs(z));
  CHECK(testutil::max_coeff_diff(full.state_at(T), tail.state_at(T / 2)) <=
        1e-10 * scale);
}

TEST_CASE("solution stays positive on the lattice") {
  const auto grid = make_grid(27);
  const auto part = build_partition();
  const auto en = enhanced_noise(sample_potential(PotentialSpec{}, grid, 53), part);
  const auto traj = solve_pam(en, InitialCondition::constant(1.0), 0.5, {}, {});
  const auto lat = idft_lattice(traj.state_at(0.5));
  for (const auto& z : lat.values) {
    CHECK(z.real() > 0);
    CHECK(std::abs(z.imag()) <= 1e-10 * std::abs(z.real()));
  }
}

TEST_CASE("solver guards: arguments, horizon, blow-up") {
  const auto grid = make_grid(5);
  const auto en = heat_only_noise(grid);
  CHECK_THROWS_AS(solve_pam(en, InitialCondition::constant(1.0), 0.0, {}, {}),
                  std::invalid_argument);
  DtPolicy bad;
  bad.dt = -1;
  CHECK_THROWS_AS(solve_pam(en, InitialCondition::constant(1.0), 1.0, bad, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_pam(en, InitialCondition::constant(1.0), 1.0, {}, {2.0}),
                  std::invalid_argument);

  const auto traj = solve_pam(en, InitialCondition::constant(1.0), 1.0, {}, {0.5});
  CHECK_THROWS_AS(traj.state_at(0.25), std::invalid_argument);

  auto hot = constant_potential_noise(grid, 100.0 * grid.epsilon());
  DtPolicy cap;
  cap.blow_up_cap = 1e6;
  CHECK_THROWS_WITH(solve_pam(hot, InitialCondition::constant(1.0), 1.0, cap, {}),
                    ContainsSubstring("blow-up"));

  SpectralField other(make_grid(7));
  CHECK_THROWS_AS(
      solve_pam(en, InitialCondition::custom(other), 1.0, {}, {}),
      std::invalid_argument);
}

TEST_CASE("kronecker data evolves to the lattice heat kernel") {
  const auto grid = make_grid(9);
  const auto en = heat_only_noise(grid);
  const double T = 0.2, eps = grid.epsilon();
  const auto traj = solve_pam(en, InitialCondition::kronecker_delta(), T, {}, {});
  const auto lat = idft_lattice(traj.state_at(T));

  // p_T(x) = (2 pi)^{-2} sum_k e^{-T |k|^2 f(eps k)} e^{i <k, eps x>} / eps^2
  // after undoing the eps^{-2} initial scaling: the transform starts at 1.
  const int h = grid.half();
  for (auto [x1, x2] : {std::array<int, 2>{0, 0}, {1, 2}, {-3, 4}}) {
    cplx want{};
    for (int k1 = -h; k1 <= h; ++k1)
      for (int k2 = -h; k2 <= h; ++k2) {
        const double k2n = double(k1) * k1 + double(k2) * k2;
        want += std::exp(-T * k2n * multiplier_f(eps * k1, eps * k2, en.mu)) *
                std::polar(1.0, eps * (k1 * x1 + k2 * x2));
      }
    want /= 4 * pi * pi;
    CHECK(lat.at(x1, x2).real() == Approx(want.real()).margin(1e-13));
  }
  // Mass is conserved: eps^2 sum_x u = transform at 0 stays 1.
  CHECK(traj.state_at(T).at(0, 0).real() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feynman-kac: exact for zero potential, throws on bad input") {
  const auto grid = make_grid(5);
  const Potential eta(grid);
  const auto mu = nearest_neighbor_walk();
  const auto est = feynman_kac_estimate(eta, mu, InitialCondition::constant(1.0),
                                        0.5, {0, 0}, 64, 7, 0.0);
  CHECK(est.mean == 1.0);
  CHECK(est.se == 0.0);
  CHECK(est.n_paths == 64);

  CHECK_THROWS_AS(feynman_kac_estimate(eta, mu, InitialCondition::constant(1.0),
                                       0.0, {0, 0}, 64, 7, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(feynman_kac_estimate(eta, mu, InitialCondition::constant(1.0),
                                       0.5, {0, 0}, 1, 7, 0.0),
                  std::invalid_argument);
  WalkMeasure frozen;
  frozen.atoms[{0, 0}] = 0.0;
  CHECK_THROWS_WITH(feynman_kac_estimate(eta, frozen, InitialCondition::constant(1.0),
                                         0.5, {0, 0}, 64, 7, 0.0),
                    ContainsSubstring("degenerate walk"));
}

TEST_CASE("feynman-kac agrees with the solver") {
  const auto grid = make_grid(5);
  const auto part = build_partition();
  const auto eta = sample_potential(PotentialSpec{}, grid, 61);
  const auto en = enhanced_noise(eta, part);
  const double T = 0.4;

  DtPolicy policy;
  policy.dt = 5e-4;
  const auto traj = solve_pam(en, InitialCondition::constant(1.0), T, policy, {});
  const auto lat = idft_lattice(traj.state_at(T));

  const auto est = feynman_kac_estimate(eta, en.mu, InitialCondition::constant(1.0),
                                        T, {1, 2}, 30000, 97, en.c_N);
  CAPTURE(est.mean, est.se, lat.at(1, 2).real());
  CHECK(std::abs(est.mean - lat.at(1, 2).real()) <= 4.5 * est.se);
}

TEST_CASE("convergence study shapes and guards") {
  PotentialSpec spec;
  const auto mu = nearest_neighbor_walk();
  const auto part = build_partition();
  CHECK_THROWS_AS(convergence_study(spec, mu, part, {3, 9}, 0.2, 4, 1, true),
                  std::invalid_argument);

  const auto rep = convergence_study(spec, mu, part, {3, 5, 9}, 0.2, 4, 1, true);
  REQUIRE(rep.names.size() == 3);
  REQUIRE(rep.values.size() == 3);
  for (const auto& per_obs : rep.values) {
    REQUIRE(per_obs.size() == 3);
    for (const auto& per_n : per_obs) {
      REQUIRE(per_n.size() == 4);
      for (double v : per_n) CHECK(std::isfinite(v));
    }
  }
  REQUIRE(rep.ks.size() == 3);
  for (const auto& per_obs : rep.ks) CHECK(per_obs.size() == 2);
  REQUIRE(rep.means.size() == 3);
}
