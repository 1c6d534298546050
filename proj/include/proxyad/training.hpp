#pragma once

#include <cstdint>
#include <vector>

#include "proxyad/losses.hpp"
#include "proxyad/nets.hpp"
#include "proxyad/papc.hpp"

namespace proxyad {

struct AblationConfig {
  bool use_si_proxy = true;    // false: single-module self-reconstruction
  bool use_memory = true;
  bool use_repairing = true;   // requires use_si_proxy
  bool score_in_latent = true;
  ProxyMode proxy_mode = ProxyMode::si;
};

void validate_ablation(const AblationConfig& ablation);

enum class ReconTrainInput { predicted, slic };
enum class PapcSource { other, self };

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  LossWeights weights;
  AblationConfig ablation;

  int base_channels = 32;
  int n_downsamples = 4;
  int memory_k = 128;
  int memory_d = 64;
  double memory_gamma = 0.99;
  int disc_base_channels = 32;
  int disc_layers = 3;

  ReconTrainInput recon_train_input = ReconTrainInput::predicted;
  PapcSource papc_source = PapcSource::other;
};

// One training example: the raw image and its proxy target (the proxy equals
// the image for self-reconstruction ablations).
struct TrainSample {
  Tensor image;
  Tensor proxy;
};

struct Stage1Result {
  ProxyExtractionModule pem;
  std::vector<double> epoch_loss;  // mean L_p per epoch
};

// Per batch: forward with straight-through substitution when the memory is
// on, one optimizer step on encoder+decoder, then the EMA memory update with
// that batch's assignments. The returned module is frozen from here on.
Stage1Result train_stage1_proxy(const std::vector<TrainSample>& data,
                                const TrainConfig& config);

struct Stage2EpochLog {
  double l_rec = 0.0;
  double l_global = 0.0;
  double l_local = 0.0;
  double d_loss = 0.0;
};

struct Stage2Result {
  ImageReconstructionModule irm;
  Discriminator disc;
  std::vector<Stage2EpochLog> epochs;
};

// Alternating discriminator/generator steps on L = L_rec + L_repairing. The
// stage-1 module stays frozen; its predicted proxies are the default
// reconstruction input.
Stage2Result train_stage2_recon(const std::vector<TrainSample>& data,
                                const ProxyExtractionModule& pem,
                                const TrainConfig& config);

}  // namespace proxyad
