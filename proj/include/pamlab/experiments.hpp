#pragma once

// Experiment orchestration: one config struct, field-level validation, six
// runners, and a manifest. Everything an invocation emits is a deterministic
// function of (config, master seed): sampling uses seed_fanout with fixed
// tags, parallel loops write into index-addressed slots, and aggregation
// order is fixed before writing. The manifest is the only file containing a
// timestamp.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pamlab/besov.hpp"
#include "pamlab/chaos.hpp"
#include "pamlab/grid.hpp"
#include "pamlab/io.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/pam.hpp"
#include "pamlab/paraproduct.hpp"
#include "pamlab/partition.hpp"
#include "pamlab/polymer.hpp"
#include "pamlab/potential.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/spectrum.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/threads.hpp"
#include "pamlab/transforms.hpp"
#include "pamlab/version.hpp"
#include "pamlab/walk.hpp"

namespace pamlab {

struct ExperimentConfig {
  std::string kind;  // noise-diagnostics | pam-convergence | operator-norm |
                     // chaos-moments | polymer | spectrum
  std::vector<int> Ns = {9, 27, 81};
  PotentialSpec disorder;
  WalkMeasure mu = nearest_neighbor_walk();
  std::uint64_t seed = 1;
  int samples = 200;
  long paths = 10000;
  double T = 0.5;
  double dt = 0.0;  // 0 = stability-based choice
  int k = 3;
  double alpha = 0.75;
  int fields = 50;             // test fields per disorder sample
  double gamma = -0.5;         // Hoelder exponent for truncation distances
  std::vector<int> Ks;         // truncation levels; empty = per-N default
  std::vector<double> times;   // polymer marginal times; empty = quarters of T
  bool renormalize = true;
  std::string out_dir = "out";
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {
      "noise-diagnostics", "pam-convergence", "operator-norm",
      "chaos-moments",     "polymer",         "spectrum"};
  return kinds;
}

namespace detail {

inline bool get_int(const nlohmann::json& j, const char* key, long long& out,
                    std::vector<std::string>& errors) {
  if (!j.contains(key)) return false;
  if (!j[key].is_number_integer()) {
    errors.push_back(std::string(key) + ": must be an integer");
    return false;
  }
  out = j[key].get<long long>();
  return true;
}

inline bool get_double(const nlohmann::json& j, const char* key, double& out,
                       std::vector<std::string>& errors) {
  if (!j.contains(key)) return false;
  if (!j[key].is_number()) {
    errors.push_back(std::string(key) + ": must be a number");
    return false;
  }
  out = j[key].get<double>();
  return true;
}

}  // namespace detail

// Overlays JSON fields onto cfg; unknown keys and type mismatches become
// field-level messages.
inline void config_from_json(const nlohmann::json& j, ExperimentConfig& cfg,
                             std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back("config: top level must be a JSON object");
    return;
  }
  static const std::set<std::string> known = {
      "kind",  "Ns",     "disorder", "walk",  "seed",  "samples",
      "paths", "T",      "dt",       "k",     "alpha", "fields",
      "gamma", "Ks",     "times",    "renormalize",    "out_dir"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) errors.push_back(key + ": unknown field");

  if (j.contains("kind")) {
    if (!j["kind"].is_string())
      errors.push_back("kind: must be a string");
    else
      cfg.kind = j["kind"].get<std::string>();
  }
  if (j.contains("Ns")) {
    if (!j["Ns"].is_array() || j["Ns"].empty()) {
      errors.push_back("Ns: must be a nonempty array of integers");
    } else {
      cfg.Ns.clear();
      for (const auto& v : j["Ns"]) {
        if (!v.is_number_integer()) {
          errors.push_back("Ns: entries must be integers");
          break;
        }
        cfg.Ns.push_back(v.get<int>());
      }
    }
  }
  long long tmp;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      errors.push_back("seed: must be an integer");
    else
      cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (detail::get_int(j, "samples", tmp, errors)) cfg.samples = static_cast<int>(tmp);
  if (detail::get_int(j, "paths", tmp, errors)) cfg.paths = tmp;
  if (detail::get_int(j, "k", tmp, errors)) cfg.k = static_cast<int>(tmp);
  if (detail::get_int(j, "fields", tmp, errors)) cfg.fields = static_cast<int>(tmp);
  detail::get_double(j, "T", cfg.T, errors);
  detail::get_double(j, "dt", cfg.dt, errors);
  detail::get_double(j, "alpha", cfg.alpha, errors);
  detail::get_double(j, "gamma", cfg.gamma, errors);
  if (j.contains("Ks")) {
    if (!j["Ks"].is_array()) {
      errors.push_back("Ks: must be an array of integers");
    } else {
      cfg.Ks.clear();
      for (const auto& v : j["Ks"]) {
        if (!v.is_number_integer()) {
          errors.push_back("Ks: entries must be integers");
          break;
        }
        cfg.Ks.push_back(v.get<int>());
      }
    }
  }
  if (j.contains("times")) {
    if (!j["times"].is_array()) {
      errors.push_back("times: must be an array of numbers");
    } else {
      cfg.times.clear();
      for (const auto& v : j["times"]) {
        if (!v.is_number()) {
          errors.push_back("times: entries must be numbers");
          break;
        }
        cfg.times.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("renormalize")) {
    if (!j["renormalize"].is_boolean())
      errors.push_back("renormalize: must be a boolean");
    else
      cfg.renormalize = j["renormalize"].get<bool>();
  }
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string())
      errors.push_back("out_dir: must be a string");
    else
      cfg.out_dir = j["out_dir"].get<std::string>();
  }
  if (j.contains("disorder")) {
    const auto& d = j["disorder"];
    if (!d.is_object()) {
      errors.push_back("disorder: must be an object");
    } else {
      if (d.contains("kind")) {
        const auto s = d["kind"].is_string() ? d["kind"].get<std::string>() : "";
        if (s == "iid")
          cfg.disorder.kind = PotentialSpec::Kind::iid;
        else if (s == "martingale")
          cfg.disorder.kind = PotentialSpec::Kind::martingale;
        else
          errors.push_back("disorder.kind: must be \"iid\" or \"martingale\"");
      }
      if (d.contains("base")) {
        try {
          cfg.disorder.base = base_distribution_from_string(
              d["base"].is_string() ? d["base"].get<std::string>() : "?");
        } catch (const std::exception& e) {
          errors.push_back(std::string("disorder.base: ") + e.what());
        }
      }
      detail::get_double(d, "moment_order", cfg.disorder.moment_order, errors);
      detail::get_double(d, "moment_bound", cfg.disorder.moment_bound, errors);
      if (d.contains("table_values"))
        cfg.disorder.table_values = d["table_values"].get<std::vector<double>>();
      if (d.contains("table_probs"))
        cfg.disorder.table_probs = d["table_probs"].get<std::vector<double>>();
    }
  }
  if (j.contains("walk")) {
    const auto& w = j["walk"];
    const std::string wkind =
        w.is_object() && w.contains("kind") && w["kind"].is_string()
            ? w["kind"].get<std::string>()
            : (w.is_string() ? w.get<std::string>() : "");
    if (wkind == "nearest-neighbor") {
      cfg.mu = nearest_neighbor_walk();
    } else if (wkind == "range2-radial") {
      double a = 0.5, b = 0.125;
      detail::get_double(w, "a", a, errors);
      detail::get_double(w, "b", b, errors);
      cfg.mu = range2_radial_walk(a, b);
    } else if (wkind == "atoms") {
      if (!w.contains("atoms") || !w["atoms"].is_array()) {
        errors.push_back("walk.atoms: must be an array of [j1, j2, mass]");
      } else {
        WalkMeasure mu;
        for (const auto& row : w["atoms"]) {
          if (!row.is_array() || row.size() != 3) {
            errors.push_back("walk.atoms: entries must be [j1, j2, mass]");
            break;
          }
          mu.atoms[{row[0].get<int>(), row[1].get<int>()}] = row[2].get<double>();
        }
        if (!mu.atoms.empty()) cfg.mu = mu;
      }
    } else {
      errors.push_back(
          "walk.kind: must be \"nearest-neighbor\", \"range2-radial\" or \"atoms\"");
    }
  }
}

inline nlohmann::json walk_json(const WalkMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& [j, m] : mu.atoms)
    atoms.push_back(nlohmann::json::array({j[0], j[1], m}));
  return nlohmann::json{{"kind", "atoms"}, {"atoms", atoms}};
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["kind"] = cfg.kind;
  j["Ns"] = cfg.Ns;
  j["disorder"] = potential_spec_json(cfg.disorder);
  j["walk"] = walk_json(cfg.mu);
  j["seed"] = cfg.seed;
  j["samples"] = cfg.samples;
  j["paths"] = cfg.paths;
  j["T"] = cfg.T;
  j["dt"] = cfg.dt;
  j["k"] = cfg.k;
  j["alpha"] = cfg.alpha;
  j["fields"] = cfg.fields;
  j["gamma"] = cfg.gamma;
  j["Ks"] = cfg.Ks;
  j["times"] = cfg.times;
  j["renormalize"] = cfg.renormalize;
  j["out_dir"] = cfg.out_dir;
  return j;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = config_to_json(cfg).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canon)));
  return buf;
}

// Semantic validation; every message names the offending field.
inline std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  bool kind_ok = false;
  for (const auto& kind : experiment_kinds()) kind_ok = kind_ok || kind == cfg.kind;
  if (!kind_ok) errors.push_back("kind: unknown experiment \"" + cfg.kind + "\"");

  if (cfg.Ns.empty()) errors.push_back("Ns: must not be empty");
  for (int N : cfg.Ns)
    if (N < 3 || N % 2 == 0) {
      errors.push_back("Ns: entries must be odd and >= 3");
      break;
    }
  if ((cfg.kind == "pam-convergence" || cfg.kind == "spectrum") && cfg.Ns.size() < 3)
    errors.push_back("Ns: " + cfg.kind + " needs at least 3 grid sizes");
  if (cfg.kind == "operator-norm" && cfg.Ns.size() < 2)
    errors.push_back("Ns: operator-norm needs at least 2 grid sizes");
  if (cfg.kind == "chaos-moments")
    for (int N : cfg.Ns)
      if (N > 9) {
        errors.push_back("Ns: chaos-moments kernels are dense over N^2 sites; N <= 9");
        break;
      }

  if (cfg.samples < 1) errors.push_back("samples: must be >= 1");
  if (cfg.kind == "spectrum" && cfg.samples < 200)
    errors.push_back("samples: spectrum needs at least 200");
  if (cfg.paths < 2) errors.push_back("paths: must be >= 2");
  if (!(cfg.T > 0)) errors.push_back("T: must be positive");
  if (cfg.dt < 0) errors.push_back("dt: must be nonnegative (0 selects automatically)");
  if (cfg.k < 1) errors.push_back("k: must be >= 1");
  if (cfg.kind == "operator-norm" && !(cfg.alpha > 0.5 && cfg.alpha < 1.0))
    errors.push_back("alpha: must lie in (0.5, 1)");
  if (cfg.fields < 1) errors.push_back("fields: must be >= 1");
  if (!(cfg.gamma < 0)) errors.push_back("gamma: must be negative");
  for (int K : cfg.Ks)
    if (K < 1 || K > *std::max_element(cfg.Ns.begin(), cfg.Ns.end()))
      errors.push_back("Ks: entries must lie in [1, max Ns]");
  for (size_t i = 0; i < cfg.times.size(); ++i)
    if (!(cfg.times[i] > (i ? cfg.times[i - 1] : 0.0)) || cfg.times[i] > cfg.T) {
      errors.push_back("times: must be strictly increasing within (0, T]");
      break;
    }
  if (cfg.out_dir.empty()) errors.push_back("out_dir: must not be empty");

  try {
    validate_potential_spec(cfg.disorder);
  } catch (const std::exception& e) {
    errors.push_back(std::string("disorder: ") + e.what());
  }
  try {
    const auto rep = validate_walk_measure(cfg.mu);
    if (!rep.pass)
      for (const auto& item : rep.items)
        if (!item.pass) errors.push_back("walk: violates \"" + item.name + "\"");
  } catch (const std::exception& e) {
    errors.push_back(std::string("walk: ") + e.what());
  }
  return errors;
}

struct RunResult {
  std::vector<std::string> outputs;
  nlohmann::json summary;
};

namespace detail {

class CsvFile {
 public:
  CsvFile(RunResult& rr, const std::string& dir, const std::string& name,
          const std::string& header)
      : os_(dir + "/" + name) {
    if (!os_) throw std::runtime_error("cannot open " + dir + "/" + name);
    os_ << header << '\n';
    rr.outputs.push_back(name);
  }
  template <typename... Parts>
  void row(const Parts&... parts) {
    bool first = true;
    ((os_ << (first ? "" : ","), first = false, put(parts)), ...);
    os_ << '\n';
  }

 private:
  void put(double v) { os_ << format_g17(v); }
  void put(int v) { os_ << v; }
  void put(long v) { os_ << v; }
  void put(std::uint64_t v) { os_ << v; }
  void put(const std::string& s) { os_ << s; }
  void put(const char* s) { os_ << s; }
  std::ofstream os_;
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

inline std::vector<int> default_truncations(int N) {
  std::vector<int> Ks;
  for (int K : {3, 5, 9, 17, 33, 65})
    if (K < N) Ks.push_back(K);
  Ks.push_back(N);
  return Ks;
}

}  // namespace detail

inline RunResult run_noise_diagnostics(const ExperimentConfig& cfg) {
  RunResult rr;
  const auto part = build_partition();

  detail::CsvFile constants(rr, cfg.out_dir, "constants.csv", "N,c_N,c_tilde_N");
  for (int N : cfg.Ns)
    constants.row(N, renorm_constant_cN(N), renorm_constant_tilde(N, cfg.mu));

  detail::CsvFile area_mean(rr, cfg.out_dir, "area_mean.csv",
                            "N,mc_mean,se,c_tilde_N");
  detail::CsvFile block_var(rr, cfg.out_dir, "block_variance.csv",
                            "N,block,variance,se_variance");
  detail::CsvFile cauchy(rr, cfg.out_dir, "cauchy.csv", "N,K,mean_distance,se");
  detail::CsvFile clt(rr, cfg.out_dir, "clt.csv",
                      "N,variance,target,ks_scaled,reject_1pct");
  detail::CsvFile plot(rr, cfg.out_dir, "plot_cauchy.csv", "x,y,series");

  for (int N : cfg.Ns) {
    const auto grid = make_grid(N);
    const auto Ks = cfg.Ks.empty() ? detail::default_truncations(N) : cfg.Ks;
    const double c_tilde = renorm_constant_tilde(N, cfg.mu);
    const int jm = block_j_max(part, SpectralField(grid));

    struct PerSample {
      double resonant_at_0 = 0;
      double clt = 0;
      std::vector<double> blocks, cauchy;
    };
    std::vector<PerSample> per(cfg.samples);
    const auto phi = [](double x1, double) { return std::sin(x1); };

    detail::stage("sampling", [&] {
      parallel_for(cfg.samples, [&](long s) {
        const auto eta = sample_potential(
            cfg.disorder, grid, seed_fanout(cfg.seed, "noise-diagnostics", N, s));
        const auto en = enhanced_noise(eta, part, cfg.mu);
        auto& slot = per[s];
        slot.resonant_at_0 = extension_eval(en.area, 0.0, 0.0).real() + en.c_tilde_N;
        for (int q = -1; q <= jm; ++q)
          slot.blocks.push_back(
              extension_eval(block(part, q, en.area), 0.0, 0.0).real());
        for (int K : Ks)
          slot.cauchy.push_back(cauchy_diagnostic(en, K, cfg.gamma, part));
        const double eps = grid.epsilon();
        double acc = 0;
        for (int l1 = -grid.half(); l1 <= grid.half(); ++l1)
          for (int l2 = -grid.half(); l2 <= grid.half(); ++l2)
            acc += phi(eps * l1, eps * l2) * eta.at(l1, l2);
        slot.clt = eps * acc;
        return true;
      });
      return true;
    });

    detail::stage("reports", [&] {
      RunningMoments area_acc;
      for (const auto& s : per) area_acc.add(s.resonant_at_0);
      area_mean.row(N, area_acc.mean(), area_acc.se_mean(), c_tilde);

      for (int q = -1; q <= jm; ++q) {
        std::vector<double> vals;
        for (const auto& s : per) vals.push_back(s.blocks[q + 1]);
        block_var.row(N, q, variance_of(vals), se_of_variance(vals));
      }
      for (size_t ki = 0; ki < Ks.size(); ++ki) {
        RunningMoments acc;
        for (const auto& s : per) acc.add(s.cauchy[ki]);
        cauchy.row(N, Ks[ki], acc.mean(), acc.se_mean());
        plot.row(static_cast<double>(Ks[ki]), acc.mean(), std::to_string(N));
      }
      std::vector<double> clt_vals;
      for (const auto& s : per) clt_vals.push_back(s.clt);
      const auto ks = ks_normal_test(clt_vals, 0.0,
                                     std::sqrt(2.0 * pi * pi));
      clt.row(N, variance_of(clt_vals), 2.0 * pi * pi, ks.scaled,
              ks.reject_1pct ? 1 : 0);
      return true;
    });

    // One persisted draw per N for downstream tooling.
    const auto eta = sample_potential(cfg.disorder, grid,
                                      seed_fanout(cfg.seed, "noise-diagnostics", N, 0));
    const auto en = enhanced_noise(eta, part, cfg.mu);
    const std::string name = "noise_N" + std::to_string(N);
    save_enhanced_noise(cfg.out_dir, name, en, cfg.disorder);
    for (const char* suffix : {"_xi.pamf", "_X.pamf", "_area.pamf", ".json"})
      rr.outputs.push_back(name + suffix);
  }
  rr.summary["kind"] = cfg.kind;
  return rr;
}

inline RunResult run_pam_convergence(const ExperimentConfig& cfg) {
  RunResult rr;
  const auto part = build_partition();
  const auto rep = detail::stage("solving", [&] {
    return convergence_study(cfg.disorder, cfg.mu, part, cfg.Ns, cfg.T, cfg.samples,
                             cfg.seed, cfg.renormalize);
  });
  detail::CsvFile obs(rr, cfg.out_dir, "observables.csv", "N,sample,observable,value");
  for (size_t o = 0; o < rep.names.size(); ++o)
    for (size_t ni = 0; ni < rep.Ns.size(); ++ni)
      for (size_t s = 0; s < rep.values[o][ni].size(); ++s)
        obs.row(rep.Ns[ni], static_cast<long>(s), rep.names[o], rep.values[o][ni][s]);
  detail::CsvFile ks(rr, cfg.out_dir, "ks.csv", "observable,N_low,N_high,ks");
  detail::CsvFile plot(rr, cfg.out_dir, "plot_ks.csv", "x,y,series");
  for (size_t o = 0; o < rep.names.size(); ++o)
    for (size_t i = 0; i + 1 < rep.Ns.size(); ++i) {
      ks.row(rep.names[o], rep.Ns[i], rep.Ns[i + 1], rep.ks[o][i]);
      plot.row(static_cast<double>(rep.Ns[i + 1]), rep.ks[o][i], rep.names[o]);
    }
  detail::CsvFile means(rr, cfg.out_dir, "means.csv", "observable,N,mean");
  for (size_t o = 0; o < rep.names.size(); ++o)
    for (size_t ni = 0; ni < rep.Ns.size(); ++ni)
      means.row(rep.names[o], rep.Ns[ni], rep.means[o][ni]);
  rr.summary["kind"] = cfg.kind;
  return rr;
}

inline RunResult run_operator_norm(const ExperimentConfig& cfg) {
  RunResult rr;
  const auto part = build_partition();
  detail::CsvFile estimates(rr, cfg.out_dir, "estimates.csv", "N,sample,estimate");
  detail::CsvFile medians(rr, cfg.out_dir, "medians.csv", "N,median");
  detail::CsvFile plot(rr, cfg.out_dir, "plot_medians.csv", "x,y,series");
  std::vector<double> med;
  for (int N : cfg.Ns) {
    const auto grid = make_grid(N);
    std::vector<double> vals(cfg.samples);
    detail::stage("sampling", [&] {
      parallel_for(cfg.samples, [&](long s) {
        const auto eta = sample_potential(cfg.disorder, grid,
                                          seed_fanout(cfg.seed, "operator-norm", N, s));
        const auto en = enhanced_noise(eta, part, cfg.mu);
        vals[s] = random_operator_norm_estimate(
            en, part, cfg.alpha, cfg.fields,
            seed_fanout(cfg.seed, "operator-fields", N, s));
      });
      return true;
    });
    for (int s = 0; s < cfg.samples; ++s) estimates.row(N, static_cast<long>(s), vals[s]);
    med.push_back(median_of(vals));
    medians.row(N, med.back());
    plot.row(static_cast<double>(N), med.back(), std::string("median"));
  }
  bool decreasing = true;
  for (size_t i = 0; i + 1 < med.size(); ++i)
    decreasing = decreasing && med[i + 1] < med[i];
  rr.summary["kind"] = cfg.kind;
  rr.summary["median_strictly_decreasing"] = decreasing;
  return rr;
}

inline RunResult run_chaos_moments(const ExperimentConfig& cfg) {
  RunResult rr;
  detail::CsvFile moments(rr, cfg.out_dir, "moments.csv",
                          "sites,order,p,lhs,rhs,ratio,ci_low,ci_high,samples");
  detail::CsvFile exact4(rr, cfg.out_dir, "exact_fourth.csv",
                         "sites,edges_oracle,trace_formula,mc_mean,mc_se");
  for (int N : cfg.Ns) {
    const auto grid = make_grid(N);
    const int M = static_cast<int>(grid.sites());
    Rng krng(seed_fanout(cfg.seed, "chaos-kernel", N, 0));
    std::vector<cplx> f1(M), f2(static_cast<long>(M) * M, cplx{});
    for (auto& v : f1) v = cplx{krng.gaussian(), 0.0};
    for (long a = 0; a < M; ++a)
      for (long b = a + 1; b < M; ++b)
        f2[a * M + b] = f2[b * M + a] = cplx{krng.gaussian(), 0.0};
    const auto k1 = make_chaos_kernel(1, M, f1);
    const auto k2 = make_chaos_kernel(2, M, f2);

    detail::stage("moments", [&] {
      for (const auto* kern : {&k1, &k2})
        for (double p : {2.0, 4.0}) {
          const auto rep = moment_bound_check(*kern, cfg.disorder, grid, p,
                                              std::max(cfg.samples, 500), cfg.seed);
          moments.row(M, rep.order, rep.p, rep.lhs, rep.rhs, rep.ratio, rep.ci.low,
                      rep.ci.high, rep.samples);
        }
      return true;
    });

    if (M <= 9 && cfg.disorder.base != BaseDistribution::tabulated) {
      const auto m2m = even_moments(cfg.disorder.base);
      const double edges = exact_fourth_moment_edges(k2, m2m);
      const double trace = cfg.disorder.base == BaseDistribution::gaussian
                               ? exact_fourth_moment_trace(k2)
                               : edges;
      RunningMoments mc;
      const int n = std::max(cfg.samples, 2000);
      for (int s = 0; s < n; ++s) {
        const auto eta = sample_potential(cfg.disorder, grid,
                                          seed_fanout(cfg.seed, "chaos-moment", N, s));
        const double q = multiple_integral(k2, eta).real();
        mc.add(q * q * q * q);
      }
      exact4.row(M, edges, trace, mc.mean(), mc.se_mean());
    }
  }
  rr.summary["kind"] = cfg.kind;
  return rr;
}

inline RunResult run_polymer(const ExperimentConfig& cfg) {
  RunResult rr;
  const int N = cfg.Ns.front();
  const auto grid = make_grid(N);
  const auto part = build_partition();
  const auto eta = sample_potential(cfg.disorder, grid,
                                    seed_fanout(cfg.seed, "polymer-disorder", N, 0));
  const auto en = enhanced_noise(eta, part, cfg.mu);
  std::vector<double> times = cfg.times;
  if (times.empty()) times = {cfg.T / 4, cfg.T / 2, 3 * cfg.T / 4};
  DtPolicy policy;
  policy.dt = cfg.dt;

  const auto rep = detail::stage("mc-vs-kernel", [&] {
    return mc_vs_kernel_check(en, {0, 0}, cfg.T, times, cfg.paths, cfg.seed, policy);
  });

  detail::CsvFile tv(rr, cfg.out_dir, "tv.csv",
                     "time,tv,ci_low,ci_high,ess,n_paths");
  for (size_t m = 0; m < rep.times.size(); ++m)
    tv.row(rep.times[m], rep.tv[m], rep.tv_ci[m].low, rep.tv_ci[m].high, rep.ess,
           rep.n_paths);
  detail::CsvFile marg(rr, cfg.out_dir, "marginals.csv", "time,l1,l2,mc,kernel");
  const int h = grid.half();
  for (size_t m = 0; m < rep.times.size(); ++m)
    for (int l1 = -h; l1 <= h; ++l1)
      for (int l2 = -h; l2 <= h; ++l2) {
        const long i = centered_index(l1, l2, N);
        marg.row(rep.times[m], l1, l2, rep.mc_marginals[m][i],
                 rep.kernel_marginals[m][i]);
      }

  detail::CsvFile paths(rr, cfg.out_dir, "paths.csv", "path,t,l1,l2");
  detail::stage("kernel-paths", [&] {
    const int n_export = 8;
    for (int p = 0; p < n_export; ++p) {
      Rng rng(seed_fanout(cfg.seed, "kernel-path", N, p));
      const auto sites = sample_kernel_path(en, {0, 0}, times, cfg.T, rng, policy);
      paths.row(p, 0.0, 0, 0);
      for (size_t m = 0; m < times.size(); ++m)
        paths.row(p, times[m], sites[m][0], sites[m][1]);
    }
    return true;
  });
  rr.summary["kind"] = cfg.kind;
  rr.summary["ess"] = rep.ess;
  rr.summary["low_ess_warning"] = rep.low_ess_warning;
  return rr;
}

inline RunResult run_spectrum(const ExperimentConfig& cfg) {
  RunResult rr;
  detail::CsvFile eig(rr, cfg.out_dir, "eigenvalues.csv",
                      "N,seed,j,lambda_raw,lambda_shifted");
  // shifted[N index][coordinate][sample]
  std::vector<std::vector<std::vector<double>>> shifted(
      cfg.Ns.size(), std::vector<std::vector<double>>(cfg.k));
  std::vector<double> unshifted_mean, shifted_mean;
  for (size_t ni = 0; ni < cfg.Ns.size(); ++ni) {
    const int N = cfg.Ns[ni];
    const auto grid = make_grid(N);
    std::vector<SpectrumSample> samples(cfg.samples);
    detail::stage("eigensolve", [&] {
      parallel_for(cfg.samples, [&](long s) {
        const auto eta = sample_potential(cfg.disorder, grid,
                                          seed_fanout(cfg.seed, "spectrum", N, s));
        samples[s] = spectrum_sample(eta, cfg.mu, cfg.k);
      });
      return true;
    });
    RunningMoments raw_acc, shift_acc;
    const double inv_e2 = 1.0 / (grid.epsilon() * grid.epsilon());
    for (const auto& sample : samples) {
      for (int j = 0; j < cfg.k; ++j) {
        eig.row(N, sample.seed, j + 1, sample.raw[j], sample.shifted[j]);
        shifted[ni][j].push_back(sample.shifted[j]);
      }
      raw_acc.add(inv_e2 * sample.raw[0]);
      shift_acc.add(sample.shifted[0]);
    }
    unshifted_mean.push_back(raw_acc.mean());
    shifted_mean.push_back(shift_acc.mean());
  }
  detail::CsvFile ks(rr, cfg.out_dir, "ks.csv", "j,N_low,N_high,ks");
  detail::CsvFile plot(rr, cfg.out_dir, "plot_ks.csv", "x,y,series");
  bool trend = true;
  for (int j = 0; j < cfg.k; ++j) {
    std::vector<double> row;
    for (size_t ni = 0; ni + 1 < cfg.Ns.size(); ++ni) {
      row.push_back(ks_two_sample(shifted[ni][j], shifted[ni + 1][j]));
      ks.row(j + 1, cfg.Ns[ni], cfg.Ns[ni + 1], row.back());
      plot.row(static_cast<double>(cfg.Ns[ni + 1]), row.back(),
               "j" + std::to_string(j + 1));
    }
    for (size_t i = 0; i + 1 < row.size(); ++i) trend = trend && row[i + 1] <= row[i];
  }
  detail::CsvFile drift(rr, cfg.out_dir, "drift.csv",
                        "N,unshifted_mean_first,shifted_mean_first");
  for (size_t ni = 0; ni < cfg.Ns.size(); ++ni)
    drift.row(cfg.Ns[ni], unshifted_mean[ni], shifted_mean[ni]);
  rr.summary["kind"] = cfg.kind;
  rr.summary["ks_trend_nonincreasing"] = trend;
  return rr;
}

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.kind == "noise-diagnostics") return run_noise_diagnostics(cfg);
  if (cfg.kind == "pam-convergence") return run_pam_convergence(cfg);
  if (cfg.kind == "operator-norm") return run_operator_norm(cfg);
  if (cfg.kind == "chaos-moments") return run_chaos_moments(cfg);
  if (cfg.kind == "polymer") return run_polymer(cfg);
  if (cfg.kind == "spectrum") return run_spectrum(cfg);
  throw std::invalid_argument("kind: unknown experiment \"" + cfg.kind + "\"");
}

inline void write_manifest(const ExperimentConfig& cfg, const RunResult& rr,
                           double wall_seconds) {
  nlohmann::json m;
  m["version"] = version_string;
  m["kind"] = cfg.kind;
  m["config"] = config_to_json(cfg);
  m["config_hash"] = config_hash(cfg);
  auto outputs = rr.outputs;
  std::sort(outputs.begin(), outputs.end());
  m["outputs"] = outputs;
  m["summary"] = rr.summary;
  m["thread_count"] = thread_count();
  m["wall_clock_seconds"] = wall_seconds;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  m["wall_clock_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  std::ofstream os(cfg.out_dir + "/MANIFEST.json");
  if (!os) throw std::runtime_error("cannot open " + cfg.out_dir + "/MANIFEST.json");
  os << m.dump(2) << '\n';
}

}  // namespace pamlab
