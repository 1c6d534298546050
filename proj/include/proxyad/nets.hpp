#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "proxyad/image.hpp"
#include "proxyad/memory_bank.hpp"
#include "proxyad/proxy.hpp"

namespace proxyad {

// Planar CHW tensor of doubles; the single value type flowing through the
// networks.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  std::size_t size() const { return data.size(); }
  double& at(int c, int r, int col) {
    return data[(static_cast<std::size_t>(c) * height + r) * width + col];
  }
  double at(int c, int r, int col) const {
    return data[(static_cast<std::size_t>(c) * height + r) * width + col];
  }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

Tensor tensor_from_image(const GrayscaleImage& image);
Tensor tensor_from_proxy(const ProxyImage& proxy);
GrayscaleImage image_from_tensor(const Tensor& t, int channel = 0);
ProxyImage proxy_from_tensor(const Tensor& t);

// Latent map (d x h x w) <-> s x d rows with s = h*w.
FeatureRows rows_from_latent(const Tensor& latent);
Tensor latent_from_rows(const FeatureRows& rows, int h, int w);

// ---------------------------------------------------------------------------
// Layers

struct Conv2d {
  int in_ch = 0, out_ch = 0, kernel = 3, stride = 1, pad = 1;
  std::vector<double> weight;  // [out_ch][in_ch * k * k]
  std::vector<double> bias;    // [out_ch]

  Conv2d() = default;
  Conv2d(int in_c, int out_c, int k, int s, int p, Rng& rng);
};

struct ConvGrads {
  std::vector<double> weight;
  std::vector<double> bias;
};

struct ConvCache {
  std::vector<double> cols;  // [in_ch*k*k][oh*ow]
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
};

Tensor conv_forward(const Conv2d& layer, const Tensor& x, ConvCache* cache);
// Accumulates parameter gradients into `grads` (if non-null) and returns the
// input gradient (if requested).
Tensor conv_backward(const Conv2d& layer, const ConvCache& cache, const Tensor& gout,
                     ConvGrads* grads, bool need_input_grad);

void leaky_relu_forward(Tensor& x, double slope, Tensor* pre_activation);
void leaky_relu_backward(Tensor& grad, const Tensor& pre_activation, double slope);
void sigmoid_forward(Tensor& x, Tensor* output_cache);
void sigmoid_backward(Tensor& grad, const Tensor& output);
Tensor upsample2x_forward(const Tensor& x);
Tensor upsample2x_backward(const Tensor& gout);

// ---------------------------------------------------------------------------
// Network specs (the decoder mirrors the encoder so output side = input side)

struct EncoderSpec {
  int in_channels = 1;
  int base_channels = 32;
  int n_downsamples = 4;
  int latent_dim = 64;
};

struct DecoderSpec {
  int out_channels = 1;
  int base_channels = 32;
  int n_upsamples = 4;
  int latent_dim = 64;
};

struct DiscriminatorSpec {
  int in_channels = 1;
  int base_channels = 32;
  int n_layers = 3;
};

constexpr double kLeakySlope = 0.2;

// Stride-2 conv blocks (kernel 4), each with a leaky rectifier; channels run
// base, 2*base, ..., latent_dim on the final block.
struct Encoder {
  EncoderSpec spec;
  std::vector<Conv2d> convs;

  Encoder() = default;
  Encoder(const EncoderSpec& s, std::uint64_t seed);
};

struct EncoderCache {
  std::vector<ConvCache> conv;
  std::vector<Tensor> pre_act;
};

struct EncoderGrads {
  std::vector<ConvGrads> convs;
  explicit EncoderGrads(const Encoder& net);
  void zero();
};

Tensor encoder_forward(const Encoder& net, const Tensor& x, EncoderCache* cache);
Tensor encoder_backward(const Encoder& net, const EncoderCache& cache,
                        const Tensor& gout, EncoderGrads* grads,
                        bool need_input_grad = false);

// Nearest-neighbor 2x upsampling + stride-1 conv (kernel 3) per block; leaky
// rectifiers inside, sigmoid on the final block so outputs live in [0,1].
struct Decoder {
  DecoderSpec spec;
  std::vector<Conv2d> convs;

  Decoder() = default;
  Decoder(const DecoderSpec& s, std::uint64_t seed);
};

struct DecoderCache {
  std::vector<ConvCache> conv;
  std::vector<Tensor> pre_act;  // final entry holds the sigmoid output
  std::vector<Tensor> upsample_in;
};

struct DecoderGrads {
  std::vector<ConvGrads> convs;
  explicit DecoderGrads(const Decoder& net);
  void zero();
};

Tensor decoder_forward(const Decoder& net, const Tensor& z, DecoderCache* cache);
Tensor decoder_backward(const Decoder& net, const DecoderCache& cache,
                        const Tensor& gout, DecoderGrads* grads,
                        bool need_input_grad = false);

// Patch-style discriminator: stride-2 conv blocks with leaky rectifiers, then
// a 1-channel stride-1 conv squashed to (0,1).
struct Discriminator {
  DiscriminatorSpec spec;
  std::vector<Conv2d> convs;  // n_layers stride-2 blocks + final conv

  Discriminator() = default;
  Discriminator(const DiscriminatorSpec& s, std::uint64_t seed);
};

struct DiscriminatorCache {
  std::vector<ConvCache> conv;
  std::vector<Tensor> pre_act;
  Tensor score;  // sigmoid output
};

struct DiscriminatorGrads {
  std::vector<ConvGrads> convs;
  explicit DiscriminatorGrads(const Discriminator& net);
  void zero();
};

Tensor discriminate(const Discriminator& net, const Tensor& x,
                    DiscriminatorCache* cache);
Tensor discriminator_backward(const Discriminator& net, const DiscriminatorCache& cache,
                              const Tensor& gout, DiscriminatorGrads* grads,
                              bool need_input_grad);

// ---------------------------------------------------------------------------
// Composed modules

struct ProxyExtractionModule {
  Encoder enc;
  Decoder dec;
  MemoryBank bank;
  bool use_memory = true;
};

struct PemCache {
  EncoderCache enc;
  DecoderCache dec;
};

struct PemOutput {
  Tensor p_hat;
  Tensor z;        // raw latent
  Tensor z_tilde;  // substituted latent (equals z without memory)
  std::vector<int> assignments;
};

PemOutput forward_proxy_module(const ProxyExtractionModule& pem, const Tensor& image,
                               PemCache* cache = nullptr);

struct ImageReconstructionModule {
  Encoder enc;
  Decoder dec;
};

struct IrmCache {
  EncoderCache enc;
  DecoderCache dec;
};

Tensor forward_recon_module(const ImageReconstructionModule& irm, const Tensor& proxy,
                            IrmCache* cache = nullptr);

// Flat parameter/gradient registry for the optimizer.
struct ParamRef {
  std::vector<double>* value;
  std::vector<double>* grad;
};

std::vector<ParamRef> collect_params(Encoder& net, EncoderGrads& grads);
std::vector<ParamRef> collect_params(Decoder& net, DecoderGrads& grads);
std::vector<ParamRef> collect_params(Discriminator& net, DiscriminatorGrads& grads);

}  // namespace proxyad
