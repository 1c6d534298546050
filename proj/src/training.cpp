#include "proxyad/training.hpp"

#include <algorithm>
#include <cmath>

#include "proxyad/optim.hpp"

namespace proxyad {

namespace {

constexpr std::uint64_t kTagShuffle = 0x51;
constexpr std::uint64_t kTagWeights = 0x52;
constexpr std::uint64_t kTagPapc = 0x53;
constexpr std::uint64_t kTagBankInit = 0x54;

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

void check_finite(double loss, const char* stage) {
  if (!std::isfinite(loss)) {
    throw DivergenceError(std::string(stage) + ": loss diverged (NaN/Inf)");
  }
}

void add_scaled(Tensor& dst, const Tensor& src, double scale) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

}  // namespace

void validate_ablation(const AblationConfig& ablation) {
  if (ablation.use_repairing && !ablation.use_si_proxy) {
    throw ConfigError("ablation: use_repairing requires use_si_proxy");
  }
}

Stage1Result train_stage1_proxy(const std::vector<TrainSample>& data,
                                const TrainConfig& config) {
  if (data.empty()) throw DataError("stage 1: no training samples");
  if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  validate_ablation(config.ablation);

  const Tensor& first_image = data.front().image;
  const Tensor& first_proxy = data.front().proxy;

  Stage1Result result;
  ProxyExtractionModule& pem = result.pem;
  pem.use_memory = config.ablation.use_memory;
  pem.enc = Encoder({first_image.channels, config.base_channels, config.n_downsamples,
                     config.memory_d},
                    Rng::derive(config.seed, kTagWeights, 1));
  pem.dec = Decoder({first_proxy.channels, config.base_channels, config.n_downsamples,
                     config.memory_d},
                    Rng::derive(config.seed, kTagWeights, 2));

  if (pem.use_memory) {
    // Warm-start the items from the untrained encoder's features so the
    // codebook starts on the actual feature distribution.
    const int rows_per_sample =
        (first_image.height >> config.n_downsamples) *
        (first_image.width >> config.n_downsamples);
    const int warm_samples = std::min<int>(
        static_cast<int>(data.size()),
        (config.memory_k + rows_per_sample - 1) / std::max(1, rows_per_sample));
    FeatureRows warmup(warm_samples * rows_per_sample, config.memory_d);
    int offset = 0;
    for (int i = 0; i < warm_samples; ++i) {
      const Tensor z = encoder_forward(pem.enc, data[i].image, nullptr);
      const FeatureRows rows = rows_from_latent(z);
      std::copy(rows.values.begin(), rows.values.end(),
                warmup.values.begin() + static_cast<std::ptrdiff_t>(offset) * config.memory_d);
      offset += rows.rows;
    }
    pem.bank = init_bank(config.memory_k, config.memory_d, config.memory_gamma,
                         Rng::derive(config.seed, kTagBankInit), warmup);
  }

  EncoderGrads enc_grads(pem.enc);
  DecoderGrads dec_grads(pem.dec);
  std::vector<ParamRef> params = collect_params(pem.enc, enc_grads);
  for (ParamRef ref : collect_params(pem.dec, dec_grads)) params.push_back(ref);
  Adam optimizer(params, {config.learning_rate});

  const int n = static_cast<int>(data.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(config.seed, kTagShuffle, epoch));
    const std::vector<int> order = shuffled_indices(n, shuffle_rng);

    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int batch = std::min(config.batch_size, n - start);
      enc_grads.zero();
      dec_grads.zero();

      FeatureRows batch_rows;
      std::vector<int> batch_assignments;
      double batch_loss = 0.0;

      for (int slot = 0; slot < batch; ++slot) {
        const TrainSample& sample = data[order[start + slot]];
        PemCache cache;
        PemOutput out = forward_proxy_module(pem, sample.image, &cache);
        batch_loss += loss_proxy(out.p_hat, sample.proxy);

        const double inv_batch = 1.0 / batch;
        Tensor g_p_hat = mse_grad(out.p_hat, sample.proxy, inv_batch);
        Tensor g_latent =
            decoder_backward(pem.dec, cache.dec, g_p_hat, &dec_grads, true);
        // Straight-through: the substituted feature's gradient is copied to
        // the raw latent unchanged.
        encoder_backward(pem.enc, cache.enc, g_latent, &enc_grads, false);

        if (pem.use_memory) {
          const FeatureRows rows = rows_from_latent(out.z);
          if (batch_rows.rows == 0) {
            batch_rows = FeatureRows(0, rows.dim);
          }
          batch_rows.values.insert(batch_rows.values.end(), rows.values.begin(),
                                   rows.values.end());
          batch_rows.rows += rows.rows;
          batch_assignments.insert(batch_assignments.end(), out.assignments.begin(),
                                   out.assignments.end());
        }
      }

      check_finite(batch_loss, "stage 1");
      optimizer.step();
      if (pem.use_memory) {
        pem.bank.ema_update(batch_rows, batch_assignments);
      }
      epoch_loss += batch_loss;
    }
    result.epoch_loss.push_back(epoch_loss / n);
  }
  return result;
}

Stage2Result train_stage2_recon(const std::vector<TrainSample>& data,
                                const ProxyExtractionModule& pem,
                                const TrainConfig& config) {
  if (data.empty()) throw DataError("stage 2: no training samples");
  if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  validate_ablation(config.ablation);
  if (!config.ablation.use_si_proxy) {
    throw ConfigError("stage 2 only applies to proxy-bridged configurations");
  }

  // The stage-1 module is frozen, so its predicted proxies never change;
  // compute them once.
  const int n = static_cast<int>(data.size());
  std::vector<Tensor> base_proxy(n);
  for (int i = 0; i < n; ++i) {
    if (config.recon_train_input == ReconTrainInput::predicted) {
      base_proxy[i] = forward_proxy_module(pem, data[i].image, nullptr).p_hat;
    } else {
      base_proxy[i] = data[i].proxy;
    }
  }

  const int proxy_channels = base_proxy.front().channels;
  Stage2Result result;
  result.irm.enc = Encoder({proxy_channels, config.base_channels, config.n_downsamples,
                            config.memory_d},
                           Rng::derive(config.seed, kTagWeights, 3));
  result.irm.dec = Decoder({data.front().image.channels, config.base_channels,
                            config.n_downsamples, config.memory_d},
                           Rng::derive(config.seed, kTagWeights, 4));
  result.disc = Discriminator(
      {data.front().image.channels, config.disc_base_channels, config.disc_layers},
      Rng::derive(config.seed, kTagWeights, 5));

  EncoderGrads g_enc(result.irm.enc);
  DecoderGrads g_dec(result.irm.dec);
  DiscriminatorGrads g_disc(result.disc);
  std::vector<ParamRef> gen_params = collect_params(result.irm.enc, g_enc);
  for (ParamRef ref : collect_params(result.irm.dec, g_dec)) gen_params.push_back(ref);
  Adam gen_opt(gen_params, {config.learning_rate});
  Adam disc_opt(collect_params(result.disc, g_disc), {config.learning_rate});

  const LossWeights& lw = config.weights;
  const bool repairing = config.ablation.use_repairing;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(config.seed, kTagShuffle, 0x1000 + epoch));
    const std::vector<int> order = shuffled_indices(n, shuffle_rng);
    Stage2EpochLog log;

    for (int start = 0; start < n; start += config.batch_size) {
      const int batch = std::min(config.batch_size, n - start);
      const double inv_batch = 1.0 / batch;

      struct SampleState {
        const TrainSample* sample;
        const Tensor* proxy;
        PseudoProxy pseudo;
        Tensor pseudo_tensor;
        IrmCache cache_hat, cache_prime;
        Tensor i_hat, i_hat_prime;
      };
      std::vector<SampleState> states(batch);

      // Generator forward pass (cached for the later generator step).
      for (int slot = 0; slot < batch; ++slot) {
        SampleState& st = states[slot];
        const int index = order[start + slot];
        st.sample = &data[index];
        st.proxy = &base_proxy[index];
        st.i_hat = forward_recon_module(result.irm, *st.proxy, &st.cache_hat);
        if (repairing) {
          Rng papc_rng(Rng::derive(config.seed, kTagPapc,
                                   static_cast<std::uint64_t>(epoch) * n + index));
          int source = index;
          if (config.papc_source == PapcSource::other && n > 1) {
            source = static_cast<int>(papc_rng.uniform_int(0, n - 2));
            if (source >= index) ++source;
          }
          st.pseudo = construct_pseudo_proxy(proxy_from_tensor(*st.proxy),
                                             image_from_tensor(data[source].image),
                                             papc_rng);
          st.pseudo_tensor = tensor_from_proxy(st.pseudo.proxy_prime);
          st.i_hat_prime =
              forward_recon_module(result.irm, st.pseudo_tensor, &st.cache_prime);
        }
      }

      // Discriminator step on detached generator outputs.
      g_disc.zero();
      double d_loss = 0.0;
      for (SampleState& st : states) {
        const Tensor& image = st.sample->image;
        auto disc_pair = [&](const Tensor& real, const Tensor& fake, double weight) {
          DiscriminatorCache real_cache, fake_cache;
          const Tensor real_scores = discriminate(result.disc, real, &real_cache);
          const Tensor fake_scores = discriminate(result.disc, fake, &fake_cache);
          d_loss += weight * disc_pair_loss(real_scores, fake_scores) * inv_batch;
          discriminator_backward(result.disc, real_cache,
                                 disc_real_grad(real_scores, weight * inv_batch),
                                 &g_disc, false);
          discriminator_backward(result.disc, fake_cache,
                                 disc_fake_grad(fake_scores, weight * inv_batch),
                                 &g_disc, false);
        };
        disc_pair(image, st.i_hat, 1.0);
        if (repairing) {
          disc_pair(image, st.i_hat_prime, lw.lambda_global);
          disc_pair(mask_tensor(image, st.pseudo.mask),
                    mask_tensor(st.i_hat_prime, st.pseudo.mask), lw.lambda_local);
        }
      }
      check_finite(d_loss, "stage 2 (discriminator)");
      disc_opt.step();

      // Generator step against the updated discriminator.
      g_enc.zero();
      g_dec.zero();
      for (SampleState& st : states) {
        const Tensor& image = st.sample->image;

        // Adversarial gradient routed through the discriminator input;
        // `raw_value` receives the unweighted -E[log D(fake)] term.
        auto adv_eval = [&](const Tensor& fake, double grad_weight, double* raw_value) {
          DiscriminatorCache cache;
          const Tensor scores = discriminate(result.disc, fake, &cache);
          *raw_value = adv_generator_term(scores);
          return discriminator_backward(
              result.disc, cache, adv_generator_grad(scores, grad_weight * inv_batch),
              nullptr, true);
        };

        double l_rec = mse(st.i_hat, image);
        Tensor g_hat = mse_grad(st.i_hat, image, inv_batch);
        if (lw.lambda_g != 0.0) {
          double adv = 0.0;
          add_scaled(g_hat, adv_eval(st.i_hat, lw.lambda_g, &adv), 1.0);
          l_rec += lw.lambda_g * adv;
        }
        log.l_rec += l_rec * inv_batch;
        Tensor g_proxy =
            decoder_backward(result.irm.dec, st.cache_hat.dec, g_hat, &g_dec, true);
        encoder_backward(result.irm.enc, st.cache_hat.enc, g_proxy, &g_enc, false);

        if (repairing) {
          double l_global = mse(st.i_hat_prime, image);
          Tensor g_prime = mse_grad(st.i_hat_prime, image, lw.lambda_global * inv_batch);
          if (lw.lambda_g != 0.0) {
            double adv = 0.0;
            add_scaled(g_prime,
                       adv_eval(st.i_hat_prime, lw.lambda_global * lw.lambda_g, &adv),
                       1.0);
            l_global += lw.lambda_g * adv;
          }

          const Tensor masked_prime = mask_tensor(st.i_hat_prime, st.pseudo.mask);
          const Tensor masked_image = mask_tensor(image, st.pseudo.mask);
          double l_local = mse(masked_prime, masked_image);
          add_scaled(g_prime, mse_grad(masked_prime, masked_image, lw.lambda_local * inv_batch),
                     1.0);
          if (lw.lambda_g != 0.0) {
            double adv = 0.0;
            Tensor g_masked =
                adv_eval(masked_prime, lw.lambda_local * lw.lambda_g, &adv);
            l_local += lw.lambda_g * adv;
            add_scaled(g_prime, mask_tensor(g_masked, st.pseudo.mask), 1.0);
          }

          log.l_global += l_global * inv_batch;
          log.l_local += l_local * inv_batch;
          Tensor g_pseudo = decoder_backward(result.irm.dec, st.cache_prime.dec,
                                             g_prime, &g_dec, true);
          encoder_backward(result.irm.enc, st.cache_prime.enc, g_pseudo, &g_enc, false);
        }
      }
      check_finite(log.l_rec, "stage 2 (generator)");
      gen_opt.step();
      log.d_loss += d_loss;
    }

    const int n_batches = (n + config.batch_size - 1) / config.batch_size;
    log.l_rec /= n_batches;
    log.l_global /= n_batches;
    log.l_local /= n_batches;
    log.d_loss /= n_batches;
    check_finite(log.l_rec + log.l_global + log.l_local, "stage 2");
    result.epochs.push_back(log);
  }
  return result;
}

}  // namespace proxyad
