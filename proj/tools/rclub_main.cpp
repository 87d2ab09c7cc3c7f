#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "rclub/harness.hpp"
#include "rclub/ingest.hpp"
#include "rclub/version.hpp"

namespace {

namespace fs = std::filesystem;

// Relative output paths land under $RCLUB_OUT when it is set.
fs::path resolve_out(const std::string& dir) {
  fs::path p(dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("RCLUB_OUT")) return fs::path(root) / p;
  return p;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

rclub::ExperimentConfig load_config_or_usage(const std::string& path) {
  if (!fs::exists(path))
    throw UsageError("config file not found: " + path);
  return rclub::load_experiment_config(path);
}

int run_command(const std::string& config_path, long seed_override,
                const std::string& out_override,
                const std::string& instance_path) {
  rclub::ExperimentConfig cfg = load_config_or_usage(config_path);
  std::vector<uint64_t> seeds = cfg.seeds;
  if (seed_override >= 0) seeds = {static_cast<uint64_t>(seed_override)};
  fs::path out_root =
      resolve_out(out_override.empty() ? cfg.out_dir : out_override);

  std::optional<rclub::BanditInstance> fixed;
  if (!instance_path.empty()) {
    if (!fs::exists(instance_path))
      throw UsageError("instance file not found: " + instance_path);
    fixed = rclub::load_instance(instance_path);
  }

  for (uint64_t seed : seeds) {
    rclub::RunResult res =
        fixed ? rclub::run_experiment(cfg, seed, *fixed)
              : rclub::run_experiment(cfg, seed);
    fs::path dir = out_root / ("seed-" + std::to_string(seed));
    rclub::emit_outputs(res, cfg, dir.string());
    std::cerr << "seed " << seed << ": wrote " << dir.string() << " ("
              << res.wall_ms << " ms)\n";
  }
  return 0;
}

int gen_instance_command(const std::string& config_path, long seed_override,
                         const std::string& out_path) {
  rclub::ExperimentConfig cfg = load_config_or_usage(config_path);
  uint64_t seed =
      seed_override >= 0 ? static_cast<uint64_t>(seed_override) : cfg.seeds[0];
  rclub::BanditInstance inst = rclub::generate_instance(cfg.instance, seed);
  rclub::save_instance(inst, out_path);
  std::cerr << "wrote " << out_path << "\n";
  return 0;
}

int svd_command(const std::string& ratings_path, int rank,
                const std::string& out_path, const std::string& items_path,
                bool no_binarize, double threshold, long seed) {
  if (!fs::exists(ratings_path))
    throw UsageError("ratings file not found: " + ratings_path);
  rclub::Matrix r = rclub::load_ratings(ratings_path);
  if (!no_binarize) r = rclub::binarize(r, threshold);
  rclub::SvdResult svd =
      rclub::truncated_svd(r, rank, static_cast<uint64_t>(seed));
  rclub::write_features_csv(rclub::user_features(svd), out_path);
  std::cerr << "wrote " << out_path << "\n";
  if (!items_path.empty()) {
    rclub::write_features_csv(rclub::item_features(svd), items_path);
    std::cerr << "wrote " << items_path << "\n";
  }
  return 0;
}

int diag_t0_command(const std::string& config_path, long seed_override) {
  rclub::ExperimentConfig cfg = load_config_or_usage(config_path);
  uint64_t seed =
      seed_override >= 0 ? static_cast<uint64_t>(seed_override) : cfg.seeds[0];
  rclub::BanditInstance inst = rclub::generate_instance(cfg.instance, seed);

  double lx = cfg.resolved_lambda_x();
  double sigma = cfg.resolved_sigma();
  double lt = rclub::lambda_tilde(lx, sigma, cfg.arms_per_round);
  std::cout << "lambda_x " << rclub::format_double(lx) << "\n";
  std::cout << "sigma " << rclub::format_double(sigma) << "\n";
  std::cout << "lambda_tilde " << rclub::format_double(lt) << "\n";
  if (inst.gamma)
    std::cout << "gamma " << rclub::format_double(*inst.gamma) << "\n";
  else
    std::cout << "gamma undefined (single cluster)\n";

  for (const auto& spec : cfg.policies) {
    if (!rclub::kind_is_clustered(spec.kind)) continue;
    rclub::ResolvedPolicy p = rclub::resolve_policy(
        spec.kind, spec.cfg, spec.name, cfg.instance.dim, cfg.horizon);
    if (!inst.gamma) continue;
    if (!(p.delta > 0.0 && p.delta < 1.0 / 3.0)) {
      std::cout << "t0[" << spec.name
                << "] undefined (delta outside (0, 1/3))\n";
      continue;
    }
    double t0 = rclub::t0_bound(inst.users, inst.dim, *inst.gamma, p.alpha,
                                p.lambda, lt, p.cbar, p.delta);
    std::cout << "t0[" << spec.name << "] " << rclub::format_double(t0)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering-of-bandits simulator with corrupted users"};
  app.set_version_flag("--version", rclub::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_override, instance_path;
  long seed_override = -1;

  CLI::App* run = app.add_subcommand("run", "Run the configured experiment");
  run->add_option("--config", config_path, "experiment config file")
      ->required();
  run->add_option("--seed", seed_override, "run only this seed");
  run->add_option("--out", out_override, "output directory root");
  run->add_option("--instance", instance_path,
                  "reuse a previously exported instance json");

  CLI::App* gen =
      app.add_subcommand("gen-instance", "Export a generated instance");
  std::string gen_out;
  gen->add_option("--config", config_path, "experiment config file")
      ->required();
  gen->add_option("--seed", seed_override, "instance seed");
  gen->add_option("--out", gen_out, "output json path")->required();

  CLI::App* svd = app.add_subcommand(
      "svd", "Factor a ratings matrix into feature vectors");
  std::string ratings_path, svd_out, items_out;
  int rank = 0;
  bool no_binarize = false;
  double threshold = 3.0;
  long svd_seed = 0;
  svd->add_option("--ratings", ratings_path, "ratings csv (dense or triplets)")
      ->required();
  svd->add_option("--rank", rank, "factorization rank")->required();
  svd->add_option("--out", svd_out, "output csv of user features")->required();
  svd->add_option("--items", items_out, "also write item features here");
  svd->add_flag("--no-binarize", no_binarize,
                "factor raw ratings instead of rating > threshold");
  svd->add_option("--threshold", threshold, "binarization threshold");
  svd->add_option("--seed", svd_seed, "subspace iteration seed");

  CLI::App* diag = app.add_subcommand(
      "diag-t0", "Print the exploration-horizon diagnostics");
  diag->add_option("--config", config_path, "experiment config file")
      ->required();
  diag->add_option("--seed", seed_override, "instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run)
      return run_command(config_path, seed_override, out_override,
                         instance_path);
    if (*gen) return gen_instance_command(config_path, seed_override, gen_out);
    if (*svd)
      return svd_command(ratings_path, rank, svd_out, items_out, no_binarize,
                         threshold, svd_seed);
    if (*diag) return diag_t0_command(config_path, seed_override);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rclub::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rclub::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
