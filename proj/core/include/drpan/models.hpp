#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "drpan/region_proposal.hpp"

namespace drpan {

namespace nn = torch::nn;

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

// ResNet encoder/decoder: 7x7 stem, two stride-2 downsampling convs, residual
// blocks, two stride-2 transposed convs, 7x7 head with tanh.
struct GeneratorSpec {
  int in_channels = 3;
  int out_channels = 3;
  int base_width = 64;
  int n_residual_blocks = 9;
  double dropout = 0.5;  // noise source inside each residual block; 0 disables

  static constexpr int kDownsampling = 2;
};

struct ConvGeometry {
  int kernel = 0;
  int stride = 0;
  int padding = 0;
};

// 70x70 PatchGAN on the channel concatenation (condition, candidate). Layer
// widths base, 2 base, 4 base, 8 base, 1 with kernel 4 and strides 2,2,2,1,1.
// padding = 0 gives valid convolutions (a 70x70 input yields one cell);
// padding = 1 gives the common padded variant (256 -> 30x30, 64 -> 6x6).
struct PatchDiscriminatorSpec {
  int in_channels = 6;
  int base_width = 64;
  int padding = 1;

  std::vector<ConvGeometry> layers() const;
};

// DCGAN-style global critic on (condition, candidate): stride-2 stages until
// the feature map is at most 4x4, then a conv head to one logit per sample.
struct ReviserSpec {
  int in_channels = 6;
  int base_width = 64;
  int max_width = 512;
  int image_size = 256;

  // Channel width of each stride-2 stage, first to last.
  std::vector<int> stage_widths() const;
  // Spatial side of the map entering the head (its kernel size).
  int head_size() const;
};

// Output side after a stack of convolutions applied to a square input.
int conv_output_size(int input, const std::vector<ConvGeometry>& layers);

// Receptive field of one output cell, by the standard backwards recurrence.
int receptive_field(const std::vector<ConvGeometry>& layers);

int scoremap_size(int image_size, const PatchDiscriminatorSpec& spec);

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

class ResidualBlockImpl : public nn::Module {
 public:
  ResidualBlockImpl(int width, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  nn::Sequential body_;
};
TORCH_MODULE(ResidualBlock);

class GeneratorImpl : public nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  nn::Sequential model_;
};
TORCH_MODULE(Generator);

class PatchDiscriminatorImpl : public nn::Module {
 public:
  explicit PatchDiscriminatorImpl(const PatchDiscriminatorSpec& spec);
  // Probabilities, N x 1 x s x s.
  torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& candidate);
  const PatchDiscriminatorSpec& spec() const { return spec_; }

 private:
  PatchDiscriminatorSpec spec_;
  nn::Sequential model_;
};
TORCH_MODULE(PatchDiscriminator);

class ReviserImpl : public nn::Module {
 public:
  explicit ReviserImpl(const ReviserSpec& spec);
  // Probabilities, shape N.
  torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& candidate);
  // Same, on an already concatenated N x (in_channels) x H x W pair.
  torch::Tensor forward_joint(const torch::Tensor& pair);
  const ReviserSpec& spec() const { return spec_; }

 private:
  ReviserSpec spec_;
  nn::Sequential model_;
};
TORCH_MODULE(Reviser);

// Conv weights ~ N(0, 0.02); batch-norm scale ~ N(1, 0.02), shift 0.
void init_weights(nn::Module& module);

// G(x, z). With a seed, the dropout noise is reproducible.
torch::Tensor generate(Generator& generator, const torch::Tensor& x, std::optional<uint64_t> noise_seed = {});

// D_p(x, candidate) as N x 1 x s x s probabilities.
torch::Tensor score_patches(PatchDiscriminator& discriminator, const torch::Tensor& x, const torch::Tensor& candidate);

// R(x, candidate) as N probabilities.
torch::Tensor revise_score(Reviser& reviser, const torch::Tensor& x, const torch::Tensor& candidate);

// Splits an N x 1 x s x s probability tensor into per-sample score maps.
// Values are clamped to [1e-7, 1 - 1e-7] so saturated sigmoids stay inside (0, 1).
std::vector<ScoreMap> to_score_maps(const torch::Tensor& scores, int source_image_size);

int64_t parameter_count(const nn::Module& module);

}  // namespace drpan
