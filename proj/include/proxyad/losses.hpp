#pragma once

#include "proxyad/image.hpp"
#include "proxyad/nets.hpp"

namespace proxyad {

struct LossWeights {
  double lambda_g = 0.01;
  double lambda_global = 0.25;
  double lambda_local = 0.5;
};

// Mean squared error over all elements.
double mse(const Tensor& a, const Tensor& b);

// Gradient of mse w.r.t. `a`, scaled by `scale`.
Tensor mse_grad(const Tensor& a, const Tensor& b, double scale = 1.0);

// Non-saturating generator term -E[log D(x)] over a (0,1) score map.
double adv_generator_term(const Tensor& scores);

// Gradient of adv_generator_term w.r.t. the score map, scaled by `scale`.
Tensor adv_generator_grad(const Tensor& scores, double scale = 1.0);

// Discriminator objective for one real/fake pair:
//   -E[log D(real)] - E[log(1 - D(fake))].
double disc_pair_loss(const Tensor& real_scores, const Tensor& fake_scores);
Tensor disc_real_grad(const Tensor& real_scores, double scale = 1.0);
Tensor disc_fake_grad(const Tensor& fake_scores, double scale = 1.0);

Tensor mask_tensor(const Tensor& x, const BinaryMask& mask);

// Proxy-prediction loss: mean squared error between the predicted and the
// segmentation-derived proxy.
double loss_proxy(const Tensor& p_hat, const Tensor& p);

// Generator-side reconstruction loss: MSE(i_hat, i) + lambda_g * (-E[log D(i_hat)]).
double loss_rec(const Tensor& i_hat, const Tensor& i, const Discriminator& d,
                double lambda_g);

// Repairing loss for a pseudo-abnormal reconstruction:
//   lambda_global * [MSE(i_hat', i)       + lambda_g * (-E[log D(i_hat')])]
// + lambda_local  * [MSE(M.i_hat', M.i)   + lambda_g * (-E[log D(M.i_hat')])].
double loss_repairing(const Tensor& i_hat_prime, const Tensor& i, const BinaryMask& mask,
                      const Discriminator& d, const LossWeights& weights);

}  // namespace proxyad
