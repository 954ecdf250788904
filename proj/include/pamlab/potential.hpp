#pragma once

// Disorder sampling. A potential is one array of standardized variables per
// lattice site, reproducible from (spec, seed). Two schemes:
//   iid        independent draws from the base distribution
//   martingale sign-flip scheme eta(zeta(k)) = sigma_k * e_k with e_k i.i.d.
//              and sigma_k = +-1 decided by the partial sum of the past,
//              so the conditional mean is 0 and conditional variance 1.
// The site enumeration zeta is row-major (the storage order), fixed once.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pamlab/grid.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

enum class BaseDistribution { gaussian, rademacher, uniform, tabulated };

inline const char* to_string(BaseDistribution d) {
  switch (d) {
    case BaseDistribution::gaussian: return "gaussian";
    case BaseDistribution::rademacher: return "rademacher";
    case BaseDistribution::uniform: return "uniform";
    case BaseDistribution::tabulated: return "tabulated";
  }
  return "?";
}

inline BaseDistribution base_distribution_from_string(const std::string& s) {
  if (s == "gaussian") return BaseDistribution::gaussian;
  if (s == "rademacher") return BaseDistribution::rademacher;
  if (s == "uniform") return BaseDistribution::uniform;
  if (s == "tabulated") return BaseDistribution::tabulated;
  throw std::invalid_argument("unknown base distribution: " + s);
}

struct PotentialSpec {
  enum class Kind { iid, martingale };
  Kind kind = Kind::iid;
  BaseDistribution base = BaseDistribution::gaussian;
  // Tabulated law: values with probabilities; must be standardized.
  std::vector<double> table_values;
  std::vector<double> table_probs;
  double moment_order = 8.0;   // p > 6
  double moment_bound = 105.0; // declared bound on E|eta|^p (105 = E Z^8)
};

// Checks the declared moments: mean 0, variance 1, E|eta|^p <= bound. For the
// closed-form distributions the p = 8 moments are 105 (gaussian), 1
// (rademacher), 9 (uniform on [-sqrt(3), sqrt(3)]).
inline void validate_potential_spec(const PotentialSpec& spec) {
  if (!(spec.moment_order > 6))
    throw std::invalid_argument("potential spec: moment order must exceed 6");
  if (!(spec.moment_bound > 0))
    throw std::invalid_argument("potential spec: moment bound must be positive");
  if (spec.base == BaseDistribution::tabulated) {
    const auto& v = spec.table_values;
    const auto& p = spec.table_probs;
    if (v.empty() || v.size() != p.size())
      throw std::invalid_argument("potential spec: tabulated law needs matching values/probs");
    double mass = 0, mean = 0, var = 0, mp = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      if (p[i] < 0) throw std::invalid_argument("potential spec: negative probability");
      mass += p[i];
      mean += p[i] * v[i];
    }
    if (std::abs(mass - 1.0) > 1e-12)
      throw std::invalid_argument("potential spec: probabilities must sum to 1");
    if (std::abs(mean) > 1e-12)
      throw std::invalid_argument("potential spec: tabulated law must be centered");
    for (size_t i = 0; i < v.size(); ++i) {
      var += p[i] * v[i] * v[i];
      mp += p[i] * std::pow(std::abs(v[i]), spec.moment_order);
    }
    if (std::abs(var - 1.0) > 1e-12)
      throw std::invalid_argument("potential spec: tabulated law must have unit variance");
    if (mp > spec.moment_bound + 1e-12)
      throw std::invalid_argument("potential spec: tabulated p-th moment exceeds declared bound");
  }
}

struct Potential {
  GridSpec grid;
  std::vector<double> values;  // row-major over centered sites
  std::uint64_t seed = 0;
  PotentialSpec spec;

  explicit Potential(GridSpec g) : grid(g), values(g.sites(), 0.0) {}

  double& at(int l1, int l2) {
    return values[static_cast<size_t>(centered_index(l1, l2, grid.N))];
  }
  double at(int l1, int l2) const {
    return values[static_cast<size_t>(centered_index(l1, l2, grid.N))];
  }
};

namespace detail {

inline double draw_base(Rng& rng, const PotentialSpec& spec) {
  switch (spec.base) {
    case BaseDistribution::gaussian: return rng.gaussian();
    case BaseDistribution::rademacher: return rng.rademacher();
    case BaseDistribution::uniform: return rng.std_uniform();
    case BaseDistribution::tabulated: {
      const int i = rng.categorical(spec.table_probs.data(),
                                    static_cast<int>(spec.table_probs.size()), 1.0);
      return spec.table_values[i];
    }
  }
  throw std::invalid_argument("unknown base distribution");
}

}  // namespace detail

inline Potential sample_potential(const PotentialSpec& spec, GridSpec grid,
                                  std::uint64_t seed) {
  validate_potential_spec(spec);
  Potential eta(grid);
  eta.seed = seed;
  eta.spec = spec;
  Rng rng(seed);
  if (spec.kind == PotentialSpec::Kind::iid) {
    for (auto& v : eta.values) v = detail::draw_base(rng, spec);
  } else {
    double past_sum = 0;
    for (auto& v : eta.values) {
      const double sigma = past_sum >= 0 ? 1.0 : -1.0;
      v = sigma * detail::draw_base(rng, spec);
      past_sum += v;
    }
  }
  return eta;
}

inline LatticeField to_lattice_field(const Potential& eta) {
  LatticeField f(eta.grid);
  for (size_t i = 0; i < eta.values.size(); ++i) f.values[i] = eta.values[i];
  return f;
}

}  // namespace pamlab
