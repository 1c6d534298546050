#pragma once

#include <vector>

#include "proxyad/nets.hpp"

namespace proxyad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.5;  // GAN-conventional
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer over a fixed set of parameter/gradient buffers.
class Adam {
 public:
  Adam(std::vector<ParamRef> params, const AdamConfig& config);

  // One update from the currently accumulated gradients.
  void step();

 private:
  std::vector<ParamRef> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace proxyad
