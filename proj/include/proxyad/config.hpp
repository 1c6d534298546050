#pragma once

#include <cstdint>
#include <string>

#include "proxyad/phantom.hpp"
#include "proxyad/proxy.hpp"
#include "proxyad/training.hpp"

namespace proxyad {

// Experiment configuration: flat key=value sections, all defaults printable
// via `proxyad config --dump-defaults`.
struct ExperimentConfig {
  // [data]
  std::string source = "phantom";  // phantom | directory
  std::string root;                // dataset root when source = directory
  PhantomSpec phantom;             // phantom.seed mirrors train.seed

  // [proxy]
  ProxyMode proxy_mode = ProxyMode::si;
  ProxyParams proxy;

  // [memory]
  int memory_k = 128;
  int memory_d = 64;
  double memory_gamma = 0.99;

  // [weights]
  LossWeights weights;

  // [train]
  double learning_rate = 1e-3;
  int epochs_proxy = 30;
  int epochs_recon = 30;
  int batch_size = 16;
  std::uint64_t seed = 1;
  int base_channels = 32;
  int n_downsamples = 4;
  int disc_base_channels = 32;
  int disc_layers = 3;
  ReconTrainInput recon_train_input = ReconTrainInput::predicted;
  PapcSource papc_source = PapcSource::other;

  // [ablation]
  AblationConfig ablation;

  // [output]
  std::string output_dir = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical dump; parse(dump(c)) == c.
std::string dump_config(const ExperimentConfig& config);

// FNV-1a over the canonical dump.
std::uint64_t config_hash(const ExperimentConfig& config);

// Applies `key=value` overrides of the form `section.key=value`.
void apply_override(ExperimentConfig& config, const std::string& assignment);

TrainConfig make_train_config(const ExperimentConfig& config, bool stage2);

void validate_config(const ExperimentConfig& config);

}  // namespace proxyad
