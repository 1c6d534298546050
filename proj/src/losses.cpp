#include "proxyad/losses.hpp"

#include <cmath>

namespace proxyad {

namespace {
// Keeps log terms finite near the sigmoid saturation points.
constexpr double kScoreEps = 1e-7;

double clamped(double s) {
  return std::min(std::max(s, kScoreEps), 1.0 - kScoreEps);
}
}  // namespace

double mse(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ArgumentError("mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double diff = a.data[i] - b.data[i];
    acc += diff * diff;
  }
  return acc / static_cast<double>(a.data.size());
}

Tensor mse_grad(const Tensor& a, const Tensor& b, double scale) {
  if (!a.same_shape(b)) throw ArgumentError("mse_grad: shape mismatch");
  Tensor g(a.channels, a.height, a.width);
  const double f = 2.0 * scale / static_cast<double>(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    g.data[i] = f * (a.data[i] - b.data[i]);
  }
  return g;
}

double adv_generator_term(const Tensor& scores) {
  double acc = 0.0;
  for (double s : scores.data) acc += std::log(clamped(s));
  return -acc / static_cast<double>(scores.data.size());
}

Tensor adv_generator_grad(const Tensor& scores, double scale) {
  Tensor g(scores.channels, scores.height, scores.width);
  const double f = -scale / static_cast<double>(scores.data.size());
  for (std::size_t i = 0; i < scores.data.size(); ++i) {
    g.data[i] = f / clamped(scores.data[i]);
  }
  return g;
}

double disc_pair_loss(const Tensor& real_scores, const Tensor& fake_scores) {
  double acc = 0.0;
  for (double s : real_scores.data) acc -= std::log(clamped(s));
  double fake = 0.0;
  for (double s : fake_scores.data) fake -= std::log(1.0 - clamped(s));
  return acc / static_cast<double>(real_scores.data.size()) +
         fake / static_cast<double>(fake_scores.data.size());
}

Tensor disc_real_grad(const Tensor& real_scores, double scale) {
  Tensor g(real_scores.channels, real_scores.height, real_scores.width);
  const double f = -scale / static_cast<double>(real_scores.data.size());
  for (std::size_t i = 0; i < real_scores.data.size(); ++i) {
    g.data[i] = f / clamped(real_scores.data[i]);
  }
  return g;
}

Tensor disc_fake_grad(const Tensor& fake_scores, double scale) {
  Tensor g(fake_scores.channels, fake_scores.height, fake_scores.width);
  const double f = scale / static_cast<double>(fake_scores.data.size());
  for (std::size_t i = 0; i < fake_scores.data.size(); ++i) {
    g.data[i] = f / (1.0 - clamped(fake_scores.data[i]));
  }
  return g;
}

Tensor mask_tensor(const Tensor& x, const BinaryMask& mask) {
  if (x.height != mask.height || x.width != mask.width) {
    throw ArgumentError("mask_tensor: shape mismatch");
  }
  Tensor out = x;
  const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask.values[i]) out.data[c * plane + i] = 0.0;
    }
  }
  return out;
}

double loss_proxy(const Tensor& p_hat, const Tensor& p) { return mse(p_hat, p); }

double loss_rec(const Tensor& i_hat, const Tensor& i, const Discriminator& d,
                double lambda_g) {
  double value = mse(i_hat, i);
  if (lambda_g != 0.0) {
    value += lambda_g * adv_generator_term(discriminate(d, i_hat, nullptr));
  }
  return value;
}

double loss_repairing(const Tensor& i_hat_prime, const Tensor& i, const BinaryMask& mask,
                      const Discriminator& d, const LossWeights& weights) {
  double global_term = mse(i_hat_prime, i);
  if (weights.lambda_g != 0.0) {
    global_term +=
        weights.lambda_g * adv_generator_term(discriminate(d, i_hat_prime, nullptr));
  }

  const Tensor masked_hat = mask_tensor(i_hat_prime, mask);
  const Tensor masked_ref = mask_tensor(i, mask);
  double local_term = mse(masked_hat, masked_ref);
  if (weights.lambda_g != 0.0) {
    local_term +=
        weights.lambda_g * adv_generator_term(discriminate(d, masked_hat, nullptr));
  }

  return weights.lambda_global * global_term + weights.lambda_local * local_term;
}

}  // namespace proxyad
