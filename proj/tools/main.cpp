#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "proxyad/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_out) {
  cmd->add_option("--config", opts.config_path, "Config file (key = value sections)");
  cmd->add_option("--set", opts.overrides,
                  "Override a config entry, e.g. --set train.epochs_proxy=5");
  cmd->add_option("--seed", opts.seed, "Override train.seed");
  if (with_out) cmd->add_option("--out", opts.out, "Output path");
}

proxyad::ExperimentConfig resolve_config(const CommonOptions& opts) {
  proxyad::ExperimentConfig config;
  if (!opts.config_path.empty()) config = proxyad::load_config(opts.config_path);
  for (const std::string& assignment : opts.overrides) {
    proxyad::apply_override(config, assignment);
  }
  if (!opts.seed.empty()) proxyad::apply_override(config, "train.seed=" + opts.seed);
  if (!opts.out.empty()) config.output_dir = opts.out;
  return config;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string token =
        csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!token.empty()) values.push_back(std::stod(token));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel-proxy reconstruction pipeline for anomaly detection"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string pem_ckpt, irm_ckpt, scores_csv, heatmap_dir, sweep_param, sweep_values;
  int emit_pseudo = 0;
  bool dump_defaults = false;

  CLI::App* phantom_gen =
      app.add_subcommand("phantom-gen", "Generate a phantom dataset on disk");
  add_common(phantom_gen, opts, true);

  CLI::App* prepare = app.add_subcommand("prepare", "Cache proxies beside the dataset");
  add_common(prepare, opts, true);
  prepare->add_option("--emit-pseudo", emit_pseudo,
                      "Also dump N pseudo proxies with masks");

  CLI::App* train_proxy =
      app.add_subcommand("train-proxy", "Train the proxy extraction stage");
  add_common(train_proxy, opts, true);

  CLI::App* train_recon =
      app.add_subcommand("train-recon", "Train the image reconstruction stage");
  add_common(train_recon, opts, true);
  train_recon->add_option("--pem", pem_ckpt, "Stage-1 checkpoint")->required();

  CLI::App* score = app.add_subcommand("score", "Score a test set");
  add_common(score, opts, true);
  score->add_option("--pem", pem_ckpt, "Stage-1 checkpoint")->required();
  score->add_option("--irm", irm_ckpt, "Stage-2 checkpoint (omit for single-module runs)");

  CLI::App* eval = app.add_subcommand("eval", "Compute metrics from scores.csv");
  add_common(eval, opts, true);
  eval->add_option("--scores", scores_csv, "scores.csv path")->required();
  eval->add_option("--heatmaps", heatmap_dir, "Heatmap directory for pixel metrics");

  CLI::App* ablate = app.add_subcommand("ablate", "Run the ablation ladder");
  add_common(ablate, opts, true);

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one hyperparameter");
  add_common(sweep, opts, true);
  sweep->add_option("--param", sweep_param,
                    "memory_size | lambda_global | lambda_local")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();

  CLI::App* config_cmd = app.add_subcommand("config", "Inspect configuration");
  add_common(config_cmd, opts, false);
  config_cmd->add_flag("--dump-defaults", dump_defaults, "Print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const proxyad::ExperimentConfig config = resolve_config(opts);
    if (phantom_gen->parsed()) {
      proxyad::cmd_phantom_gen(config);
    } else if (prepare->parsed()) {
      proxyad::cmd_prepare(config, emit_pseudo);
    } else if (train_proxy->parsed()) {
      const std::string out = opts.out.empty() ? "pem.ckpt" : opts.out;
      proxyad::cmd_train_proxy(config, out);
    } else if (train_recon->parsed()) {
      const std::string out = opts.out.empty() ? "irm.ckpt" : opts.out;
      proxyad::cmd_train_recon(config, pem_ckpt, out);
    } else if (score->parsed()) {
      proxyad::cmd_score(config, pem_ckpt, irm_ckpt, config.output_dir);
    } else if (eval->parsed()) {
      proxyad::cmd_eval(config, scores_csv, heatmap_dir, config.output_dir);
    } else if (ablate->parsed()) {
      proxyad::run_ablation(config, config.output_dir);
    } else if (sweep->parsed()) {
      proxyad::run_sweep(config, sweep_param, parse_values(sweep_values),
                         config.output_dir);
    } else if (config_cmd->parsed()) {
      if (dump_defaults) {
        std::fputs(proxyad::dump_config(proxyad::ExperimentConfig{}).c_str(), stdout);
      } else {
        std::fputs(proxyad::dump_config(config).c_str(), stdout);
      }
    }
  } catch (const proxyad::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const proxyad::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const proxyad::DivergenceError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
