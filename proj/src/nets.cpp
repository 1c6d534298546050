#include "proxyad/nets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace proxyad {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

Tensor tensor_from_image(const GrayscaleImage& image) {
  Tensor t(1, image.height, image.width);
  t.data = image.pixels;
  return t;
}

Tensor tensor_from_proxy(const ProxyImage& proxy) {
  Tensor t(proxy.channels, proxy.height, proxy.width);
  t.data = proxy.data;
  return t;
}

GrayscaleImage image_from_tensor(const Tensor& t, int channel) {
  GrayscaleImage out(t.height, t.width);
  const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
  std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(channel) * plane, plane,
              out.pixels.begin());
  return out;
}

ProxyImage proxy_from_tensor(const Tensor& t) {
  ProxyImage out(t.height, t.width, t.channels);
  out.data = t.data;
  return out;
}

FeatureRows rows_from_latent(const Tensor& latent) {
  const int s = latent.height * latent.width;
  FeatureRows rows(s, latent.channels);
  for (int c = 0; c < latent.channels; ++c) {
    const double* plane =
        latent.data.data() + static_cast<std::size_t>(c) * s;
    for (int i = 0; i < s; ++i) rows.row(i)[c] = plane[i];
  }
  return rows;
}

Tensor latent_from_rows(const FeatureRows& rows, int h, int w) {
  if (rows.rows != h * w) throw ArgumentError("latent_from_rows: size mismatch");
  Tensor t(rows.dim, h, w);
  const int s = h * w;
  for (int c = 0; c < rows.dim; ++c) {
    double* plane = t.data.data() + static_cast<std::size_t>(c) * s;
    for (int i = 0; i < s; ++i) plane[i] = rows.row(i)[c];
  }
  return t;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_c, int out_c, int k, int s, int p, Rng& rng)
    : in_ch(in_c), out_ch(out_c), kernel(k), stride(s), pad(p),
      weight(static_cast<std::size_t>(out_c) * in_c * k * k),
      bias(out_c, 0.0) {
  // Fan-in-scaled uniform init; biases start at zero.
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_c) * k * k);
  for (double& v : weight) v = rng.uniform(-bound, bound);
}

namespace {

void im2col(const Tensor& x, int kernel, int stride, int pad, int out_h, int out_w,
            std::vector<double>& cols) {
  const int kk = kernel * kernel;
  const std::size_t n_cols = static_cast<std::size_t>(out_h) * out_w;
  cols.assign(static_cast<std::size_t>(x.channels) * kk * n_cols, 0.0);
  for (int c = 0; c < x.channels; ++c) {
    for (int kr = 0; kr < kernel; ++kr) {
      for (int kc = 0; kc < kernel; ++kc) {
        double* dst = cols.data() +
                      (static_cast<std::size_t>(c) * kk + kr * kernel + kc) * n_cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + kr;
          if (iy < 0 || iy >= x.height) continue;
          const double* src =
              x.data.data() + (static_cast<std::size_t>(c) * x.height + iy) * x.width;
          double* row = dst + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kc;
            if (ix >= 0 && ix < x.width) row[ox] = src[ix];
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& cols, int channels, int height, int width,
            int kernel, int stride, int pad, int out_h, int out_w, Tensor& x) {
  x = Tensor(channels, height, width);
  const int kk = kernel * kernel;
  const std::size_t n_cols = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int kr = 0; kr < kernel; ++kr) {
      for (int kc = 0; kc < kernel; ++kc) {
        const double* src = cols.data() +
                            (static_cast<std::size_t>(c) * kk + kr * kernel + kc) * n_cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + kr;
          if (iy < 0 || iy >= height) continue;
          double* dst =
              x.data.data() + (static_cast<std::size_t>(c) * height + iy) * width;
          const double* row = src + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kc;
            if (ix >= 0 && ix < width) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

int conv_out_side(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

Tensor conv_forward(const Conv2d& layer, const Tensor& x, ConvCache* cache) {
  if (x.channels != layer.in_ch) throw ArgumentError("conv: channel mismatch");
  const int out_h = conv_out_side(x.height, layer.kernel, layer.stride, layer.pad);
  const int out_w = conv_out_side(x.width, layer.kernel, layer.stride, layer.pad);
  if (out_h < 1 || out_w < 1) throw ArgumentError("conv: input too small");

  ConvCache local;
  ConvCache& cc = cache ? *cache : local;
  cc.in_h = x.height;
  cc.in_w = x.width;
  cc.out_h = out_h;
  cc.out_w = out_w;
  im2col(x, layer.kernel, layer.stride, layer.pad, out_h, out_w, cc.cols);

  const int ickk = layer.in_ch * layer.kernel * layer.kernel;
  const std::size_t n_cols = static_cast<std::size_t>(out_h) * out_w;
  Tensor out(layer.out_ch, out_h, out_w);
  ConstMapRM w(layer.weight.data(), layer.out_ch, ickk);
  ConstMapRM cols(cc.cols.data(), ickk, static_cast<Eigen::Index>(n_cols));
  MapRM o(out.data.data(), layer.out_ch, static_cast<Eigen::Index>(n_cols));
  o.noalias() = w * cols;
  for (int oc = 0; oc < layer.out_ch; ++oc) o.row(oc).array() += layer.bias[oc];
  return out;
}

Tensor conv_backward(const Conv2d& layer, const ConvCache& cache, const Tensor& gout,
                     ConvGrads* grads, bool need_input_grad) {
  const int ickk = layer.in_ch * layer.kernel * layer.kernel;
  const std::size_t n_cols = static_cast<std::size_t>(cache.out_h) * cache.out_w;
  ConstMapRM g(gout.data.data(), layer.out_ch, static_cast<Eigen::Index>(n_cols));
  ConstMapRM cols(cache.cols.data(), ickk, static_cast<Eigen::Index>(n_cols));

  if (grads) {
    if (grads->weight.size() != layer.weight.size()) {
      grads->weight.assign(layer.weight.size(), 0.0);
      grads->bias.assign(layer.bias.size(), 0.0);
    }
    MapRM gw(grads->weight.data(), layer.out_ch, ickk);
    gw.noalias() += g * cols.transpose();
    for (int oc = 0; oc < layer.out_ch; ++oc) grads->bias[oc] += g.row(oc).sum();
  }

  Tensor gin;
  if (need_input_grad) {
    ConstMapRM w(layer.weight.data(), layer.out_ch, ickk);
    std::vector<double> gcols(static_cast<std::size_t>(ickk) * n_cols);
    MapRM gc(gcols.data(), ickk, static_cast<Eigen::Index>(n_cols));
    gc.noalias() = w.transpose() * g;
    col2im(gcols, layer.in_ch, cache.in_h, cache.in_w, layer.kernel, layer.stride,
           layer.pad, cache.out_h, cache.out_w, gin);
  }
  return gin;
}

void leaky_relu_forward(Tensor& x, double slope, Tensor* pre_activation) {
  if (pre_activation) *pre_activation = x;
  for (double& v : x.data) {
    if (v < 0.0) v *= slope;
  }
}

void leaky_relu_backward(Tensor& grad, const Tensor& pre_activation, double slope) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (pre_activation.data[i] < 0.0) grad.data[i] *= slope;
  }
}

void sigmoid_forward(Tensor& x, Tensor* output_cache) {
  for (double& v : x.data) v = 1.0 / (1.0 + std::exp(-v));
  if (output_cache) *output_cache = x;
}

void sigmoid_backward(Tensor& grad, const Tensor& output) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    const double y = output.data[i];
    grad.data[i] *= y * (1.0 - y);
  }
}

Tensor upsample2x_forward(const Tensor& x) {
  Tensor out(x.channels, x.height * 2, x.width * 2);
  for (int c = 0; c < x.channels; ++c) {
    for (int r = 0; r < x.height; ++r) {
      for (int col = 0; col < x.width; ++col) {
        const double v = x.at(c, r, col);
        out.at(c, 2 * r, 2 * col) = v;
        out.at(c, 2 * r, 2 * col + 1) = v;
        out.at(c, 2 * r + 1, 2 * col) = v;
        out.at(c, 2 * r + 1, 2 * col + 1) = v;
      }
    }
  }
  return out;
}

Tensor upsample2x_backward(const Tensor& gout) {
  Tensor gin(gout.channels, gout.height / 2, gout.width / 2);
  for (int c = 0; c < gin.channels; ++c) {
    for (int r = 0; r < gin.height; ++r) {
      for (int col = 0; col < gin.width; ++col) {
        gin.at(c, r, col) = gout.at(c, 2 * r, 2 * col) + gout.at(c, 2 * r, 2 * col + 1) +
                            gout.at(c, 2 * r + 1, 2 * col) +
                            gout.at(c, 2 * r + 1, 2 * col + 1);
      }
    }
  }
  return gin;
}

// ---------------------------------------------------------------------------
// Encoder

namespace {

int encoder_block_channels(const EncoderSpec& spec, int block) {
  if (block == spec.n_downsamples - 1) return spec.latent_dim;
  return block == 0 ? spec.base_channels : 2 * spec.base_channels;
}

}  // namespace

Encoder::Encoder(const EncoderSpec& s, std::uint64_t seed) : spec(s) {
  if (s.n_downsamples < 1) throw ConfigError("encoder: n_downsamples must be >= 1");
  Rng rng(seed);
  int in_c = s.in_channels;
  for (int b = 0; b < s.n_downsamples; ++b) {
    const int out_c = encoder_block_channels(s, b);
    convs.emplace_back(in_c, out_c, 4, 2, 1, rng);
    in_c = out_c;
  }
}

EncoderGrads::EncoderGrads(const Encoder& net) : convs(net.convs.size()) {
  for (std::size_t i = 0; i < convs.size(); ++i) {
    convs[i].weight.assign(net.convs[i].weight.size(), 0.0);
    convs[i].bias.assign(net.convs[i].bias.size(), 0.0);
  }
}

void EncoderGrads::zero() {
  for (auto& g : convs) {
    std::fill(g.weight.begin(), g.weight.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
  }
}

Tensor encoder_forward(const Encoder& net, const Tensor& x, EncoderCache* cache) {
  const int reduction = 1 << net.spec.n_downsamples;
  if (x.height % reduction != 0 || x.width % reduction != 0) {
    throw ConfigError("encoder: input side not divisible by 2^n_downsamples");
  }
  if (cache) {
    cache->conv.resize(net.convs.size());
    cache->pre_act.resize(net.convs.size());
  }
  Tensor h = x;
  for (std::size_t b = 0; b < net.convs.size(); ++b) {
    h = conv_forward(net.convs[b], h, cache ? &cache->conv[b] : nullptr);
    leaky_relu_forward(h, kLeakySlope, cache ? &cache->pre_act[b] : nullptr);
  }
  return h;
}

Tensor encoder_backward(const Encoder& net, const EncoderCache& cache,
                        const Tensor& gout, EncoderGrads* grads,
                        bool need_input_grad) {
  Tensor g = gout;
  for (int b = static_cast<int>(net.convs.size()) - 1; b >= 0; --b) {
    leaky_relu_backward(g, cache.pre_act[b], kLeakySlope);
    const bool need_gin = b > 0 || need_input_grad;
    g = conv_backward(net.convs[b], cache.conv[b], g,
                      grads ? &grads->convs[b] : nullptr, need_gin);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Decoder

Decoder::Decoder(const DecoderSpec& s, std::uint64_t seed) : spec(s) {
  if (s.n_upsamples < 1) throw ConfigError("decoder: n_upsamples must be >= 1");
  Rng rng(seed);
  // Mirror of the encoder channel ladder.
  EncoderSpec mirror{s.out_channels, s.base_channels, s.n_upsamples, s.latent_dim};
  int in_c = s.latent_dim;
  for (int b = 0; b < s.n_upsamples; ++b) {
    const int mirrored_block = s.n_upsamples - 2 - b;
    const int out_c = mirrored_block >= 0 ? encoder_block_channels(mirror, mirrored_block)
                                          : s.out_channels;
    convs.emplace_back(in_c, out_c, 3, 1, 1, rng);
    in_c = out_c;
  }
}

DecoderGrads::DecoderGrads(const Decoder& net) : convs(net.convs.size()) {
  for (std::size_t i = 0; i < convs.size(); ++i) {
    convs[i].weight.assign(net.convs[i].weight.size(), 0.0);
    convs[i].bias.assign(net.convs[i].bias.size(), 0.0);
  }
}

void DecoderGrads::zero() {
  for (auto& g : convs) {
    std::fill(g.weight.begin(), g.weight.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
  }
}

Tensor decoder_forward(const Decoder& net, const Tensor& z, DecoderCache* cache) {
  if (z.channels != net.spec.latent_dim) {
    throw ArgumentError("decoder: latent dimension mismatch");
  }
  if (cache) {
    cache->conv.resize(net.convs.size());
    cache->pre_act.resize(net.convs.size());
    cache->upsample_in.resize(net.convs.size());
  }
  Tensor h = z;
  for (std::size_t b = 0; b < net.convs.size(); ++b) {
    if (cache) cache->upsample_in[b] = h;
    h = upsample2x_forward(h);
    h = conv_forward(net.convs[b], h, cache ? &cache->conv[b] : nullptr);
    if (b + 1 < net.convs.size()) {
      leaky_relu_forward(h, kLeakySlope, cache ? &cache->pre_act[b] : nullptr);
    } else {
      sigmoid_forward(h, cache ? &cache->pre_act[b] : nullptr);
    }
  }
  return h;
}

Tensor decoder_backward(const Decoder& net, const DecoderCache& cache,
                        const Tensor& gout, DecoderGrads* grads,
                        bool need_input_grad) {
  Tensor g = gout;
  for (int b = static_cast<int>(net.convs.size()) - 1; b >= 0; --b) {
    if (b + 1 < static_cast<int>(net.convs.size())) {
      leaky_relu_backward(g, cache.pre_act[b], kLeakySlope);
    } else {
      sigmoid_backward(g, cache.pre_act[b]);
    }
    const bool need_gin = b > 0 || need_input_grad;
    g = conv_backward(net.convs[b], cache.conv[b], g,
                      grads ? &grads->convs[b] : nullptr, need_gin);
    if (need_gin) g = upsample2x_backward(g);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(const DiscriminatorSpec& s, std::uint64_t seed) : spec(s) {
  if (s.n_layers < 1) throw ConfigError("discriminator: n_layers must be >= 1");
  Rng rng(seed);
  int in_c = s.in_channels;
  for (int b = 0; b < s.n_layers; ++b) {
    const int out_c = b == 0 ? s.base_channels : 2 * s.base_channels;
    convs.emplace_back(in_c, out_c, 4, 2, 1, rng);
    in_c = out_c;
  }
  convs.emplace_back(in_c, 1, 3, 1, 1, rng);  // per-patch score head
}

DiscriminatorGrads::DiscriminatorGrads(const Discriminator& net)
    : convs(net.convs.size()) {
  for (std::size_t i = 0; i < convs.size(); ++i) {
    convs[i].weight.assign(net.convs[i].weight.size(), 0.0);
    convs[i].bias.assign(net.convs[i].bias.size(), 0.0);
  }
}

void DiscriminatorGrads::zero() {
  for (auto& g : convs) {
    std::fill(g.weight.begin(), g.weight.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
  }
}

Tensor discriminate(const Discriminator& net, const Tensor& x,
                    DiscriminatorCache* cache) {
  if (cache) {
    cache->conv.resize(net.convs.size());
    cache->pre_act.resize(net.convs.size());
  }
  Tensor h = x;
  for (std::size_t b = 0; b < net.convs.size(); ++b) {
    h = conv_forward(net.convs[b], h, cache ? &cache->conv[b] : nullptr);
    if (b + 1 < net.convs.size()) {
      leaky_relu_forward(h, kLeakySlope, cache ? &cache->pre_act[b] : nullptr);
    } else {
      sigmoid_forward(h, cache ? &cache->pre_act[b] : nullptr);
    }
  }
  if (cache) cache->score = h;
  return h;
}

Tensor discriminator_backward(const Discriminator& net, const DiscriminatorCache& cache,
                              const Tensor& gout, DiscriminatorGrads* grads,
                              bool need_input_grad) {
  Tensor g = gout;
  for (int b = static_cast<int>(net.convs.size()) - 1; b >= 0; --b) {
    if (b + 1 < static_cast<int>(net.convs.size())) {
      leaky_relu_backward(g, cache.pre_act[b], kLeakySlope);
    } else {
      sigmoid_backward(g, cache.pre_act[b]);
    }
    const bool need_gin = b > 0 || need_input_grad;
    g = conv_backward(net.convs[b], cache.conv[b], g,
                      grads ? &grads->convs[b] : nullptr, need_gin);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Composed modules

PemOutput forward_proxy_module(const ProxyExtractionModule& pem, const Tensor& image,
                               PemCache* cache) {
  PemOutput out;
  out.z = encoder_forward(pem.enc, image, cache ? &cache->enc : nullptr);
  if (pem.use_memory) {
    if (pem.enc.spec.latent_dim != pem.bank.d()) {
      throw ConfigError("proxy module: encoder latent dim != memory d");
    }
    const FeatureRows rows = rows_from_latent(out.z);
    MemoryBank::Retrieval r = pem.bank.retrieve(rows);
    out.assignments = std::move(r.assignments);
    const FeatureRows substituted = straight_through(rows, r.substituted);
    out.z_tilde = latent_from_rows(substituted, out.z.height, out.z.width);
  } else {
    out.z_tilde = out.z;
  }
  out.p_hat = decoder_forward(pem.dec, out.z_tilde, cache ? &cache->dec : nullptr);
  return out;
}

Tensor forward_recon_module(const ImageReconstructionModule& irm, const Tensor& proxy,
                            IrmCache* cache) {
  if (proxy.channels != irm.enc.spec.in_channels) {
    throw ArgumentError("recon module: proxy channel count mismatch");
  }
  const Tensor z = encoder_forward(irm.enc, proxy, cache ? &cache->enc : nullptr);
  return decoder_forward(irm.dec, z, cache ? &cache->dec : nullptr);
}

std::vector<ParamRef> collect_params(Encoder& net, EncoderGrads& grads) {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < net.convs.size(); ++i) {
    refs.push_back({&net.convs[i].weight, &grads.convs[i].weight});
    refs.push_back({&net.convs[i].bias, &grads.convs[i].bias});
  }
  return refs;
}

std::vector<ParamRef> collect_params(Decoder& net, DecoderGrads& grads) {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < net.convs.size(); ++i) {
    refs.push_back({&net.convs[i].weight, &grads.convs[i].weight});
    refs.push_back({&net.convs[i].bias, &grads.convs[i].bias});
  }
  return refs;
}

std::vector<ParamRef> collect_params(Discriminator& net, DiscriminatorGrads& grads) {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < net.convs.size(); ++i) {
    refs.push_back({&net.convs[i].weight, &grads.convs[i].weight});
    refs.push_back({&net.convs[i].bias, &grads.convs[i].bias});
  }
  return refs;
}

}  // namespace proxyad
