// pam-lab: command-line front end for the experiment runners.
//
// Exit codes: 0 success, 2 invalid configuration (every message names the
// offending field), 1 runtime failure (message names the failing stage).
// Precedence: built-in defaults < --config file < explicit flags.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pamlab/experiments.hpp"
#include "pamlab/version.hpp"

namespace {

struct FlagSet {
  std::string config_path;
  std::vector<int> Ns;
  std::uint64_t seed = 0;
  int samples = 0;
  long paths = 0;
  double T = 0, dt = 0, alpha = 0, gamma = 0;
  int k = 0, fields = 0;
  std::vector<int> Ks;
  std::vector<double> times;
  std::string out_dir, walk = "nearest-neighbor", base = "gaussian",
                       disorder_kind = "iid";
  double walk_a = 0.5, walk_b = 0.125;
  bool renormalize = true;
};

void add_common_options(CLI::App* sub, FlagSet& fs) {
  sub->add_option("--config", fs.config_path, "JSON config file; flags override it");
  sub->add_option("--N,--Ns", fs.Ns, "grid sizes (odd, >= 3)")->delimiter(',');
  sub->add_option("--seed", fs.seed, "master seed for the deterministic fan-out");
  sub->add_option("--samples", fs.samples, "disorder samples per grid size");
  sub->add_option("--paths", fs.paths, "Monte Carlo path count");
  sub->add_option("--T", fs.T, "time horizon");
  sub->add_option("--dt", fs.dt, "time step (0 = stability-based choice)");
  sub->add_option("--k", fs.k, "number of eigenvalues");
  sub->add_option("--alpha", fs.alpha, "test-field regularity, in (0.5, 1)");
  sub->add_option("--fields", fs.fields, "test fields per disorder sample");
  sub->add_option("--gamma", fs.gamma, "Hoelder exponent for truncation distances");
  sub->add_option("--K,--Ks", fs.Ks, "spectral truncation levels")->delimiter(',');
  sub->add_option("--times", fs.times, "marginal times, increasing in (0, T]")
      ->delimiter(',');
  sub->add_option("--out", fs.out_dir, "output directory");
  sub->add_option("--walk", fs.walk, "nearest-neighbor | range2-radial")
      ->check(CLI::IsMember({"nearest-neighbor", "range2-radial"}));
  sub->add_option("--walk-a", fs.walk_a, "range-2 walk unit-jump mass");
  sub->add_option("--walk-b", fs.walk_b, "range-2 walk double-jump mass");
  sub->add_option("--base", fs.base, "gaussian | rademacher | uniform")
      ->check(CLI::IsMember({"gaussian", "rademacher", "uniform"}));
  sub->add_option("--disorder-kind", fs.disorder_kind, "iid | martingale")
      ->check(CLI::IsMember({"iid", "martingale"}));
  sub->add_flag("--renormalize,!--no-renormalize", fs.renormalize,
                "subtract c_N in the solver");
}

void apply_flags(const CLI::App* sub, const FlagSet& fs, pamlab::ExperimentConfig& cfg,
                 std::vector<std::string>& errors) {
  if (sub->count("--N")) cfg.Ns = fs.Ns;
  if (sub->count("--seed")) cfg.seed = fs.seed;
  if (sub->count("--samples")) cfg.samples = fs.samples;
  if (sub->count("--paths")) cfg.paths = fs.paths;
  if (sub->count("--T")) cfg.T = fs.T;
  if (sub->count("--dt")) cfg.dt = fs.dt;
  if (sub->count("--k")) cfg.k = fs.k;
  if (sub->count("--alpha")) cfg.alpha = fs.alpha;
  if (sub->count("--fields")) cfg.fields = fs.fields;
  if (sub->count("--gamma")) cfg.gamma = fs.gamma;
  if (sub->count("--K")) cfg.Ks = fs.Ks;
  if (sub->count("--times")) cfg.times = fs.times;
  if (sub->count("--out")) cfg.out_dir = fs.out_dir;
  if (sub->count("--renormalize") || sub->count("--no-renormalize"))
    cfg.renormalize = fs.renormalize;
  if (sub->count("--walk")) {
    cfg.mu = fs.walk == "range2-radial"
                 ? pamlab::range2_radial_walk(fs.walk_a, fs.walk_b)
                 : pamlab::nearest_neighbor_walk();
  }
  if (sub->count("--base")) {
    try {
      cfg.disorder.base = pamlab::base_distribution_from_string(fs.base);
    } catch (const std::exception& e) {
      errors.push_back(std::string("base: ") + e.what());
    }
  }
  if (sub->count("--disorder-kind"))
    cfg.disorder.kind = fs.disorder_kind == "martingale"
                            ? pamlab::PotentialSpec::Kind::martingale
                            : pamlab::PotentialSpec::Kind::iid;
}

void apply_kind_defaults(pamlab::ExperimentConfig& cfg) {
  if (cfg.kind == "chaos-moments") cfg.Ns = {3, 5, 9};
  if (cfg.kind == "polymer") cfg.Ns = {5};
  if (cfg.kind == "noise-diagnostics") cfg.samples = 400;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("pam-lab ") + pamlab::version_string +
               ": numerical laboratory for the renormalized lattice model"};
  app.require_subcommand(1);
  FlagSet fs;
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"noise-diagnostics", "enhanced-noise constants, area statistics, CLT check"},
      {"pam-convergence", "observable laws of the solver across grid sizes"},
      {"operator-norm", "empirical decay of the random operator norm"},
      {"chaos-moments", "multiple-integral moment identities and bounds"},
      {"polymer", "kernel representation vs weighted path sampling"},
      {"spectrum", "shifted low eigenvalues of the Anderson Hamiltonian"}};
  for (const auto& [name, blurb] : kinds) add_common_options(app.add_subcommand(name, blurb), fs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  pamlab::ExperimentConfig cfg;
  cfg.kind = sub->get_name();
  apply_kind_defaults(cfg);

  std::vector<std::string> errors;
  if (sub->count("--config")) {
    std::ifstream is(fs.config_path);
    if (!is) {
      errors.push_back("config: cannot open " + fs.config_path);
    } else {
      try {
        nlohmann::json j;
        is >> j;
        if (j.contains("kind") && j["kind"].is_string() &&
            j["kind"].get<std::string>() != cfg.kind)
          errors.push_back("kind: config file says \"" +
                           j["kind"].get<std::string>() +
                           "\" but the subcommand is \"" + cfg.kind + "\"");
        j.erase("kind");
        pamlab::config_from_json(j, cfg, errors);
      } catch (const nlohmann::json::exception& e) {
        errors.push_back(std::string("config: invalid JSON: ") + e.what());
      }
    }
  }
  apply_flags(sub, fs, cfg, errors);
  for (const auto& msg : pamlab::validate_config(cfg)) errors.push_back(msg);
  if (!errors.empty()) {
    for (const auto& msg : errors) std::cerr << "config error: " << msg << "\n";
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  pamlab::RunResult rr;
  try {
    rr = pamlab::run_experiment(cfg);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::cerr << "runtime error: "
              << (what.rfind("stage ", 0) == 0 ? what : "stage setup: " + what)
              << "\n";
    return 1;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    pamlab::write_manifest(cfg, rr, secs);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: stage manifest: " << e.what() << "\n";
    return 1;
  }
  std::cout << cfg.kind << ": wrote " << rr.outputs.size() << " report files and "
            << "MANIFEST.json to " << cfg.out_dir << "\n";
  return 0;
}
