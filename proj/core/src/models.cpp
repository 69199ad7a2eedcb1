#include "drpan/models.hpp"

#include <algorithm>
#include <string>

#include "drpan/error.hpp"

namespace drpan {

namespace {

constexpr double kProbabilityFloor = 1e-7;

void check_pair(const torch::Tensor& x, const torch::Tensor& candidate, const char* who) {
  if (x.dim() != 4 || candidate.dim() != 4) throw ShapeError(std::string(who) + ": expected N x C x H x W inputs");
  if (x.size(0) != candidate.size(0) || x.size(2) != candidate.size(2) || x.size(3) != candidate.size(3)) {
    throw ShapeError(std::string(who) + ": condition and candidate differ in batch or spatial size");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Layer arithmetic
// ---------------------------------------------------------------------------

std::vector<ConvGeometry> PatchDiscriminatorSpec::layers() const {
  return {{4, 2, padding}, {4, 2, padding}, {4, 2, padding}, {4, 1, padding}, {4, 1, padding}};
}

std::vector<int> ReviserSpec::stage_widths() const {
  if (image_size < 8) throw ConfigError("reviser needs an input of at least 8x8");
  std::vector<int> widths;
  int size = image_size;
  int width = base_width;
  while (size > 4) {
    widths.push_back(std::min(width, max_width));
    width *= 2;
    size = (size - 2) / 2 + 1;  // kernel 4, stride 2, padding 1
  }
  return widths;
}

int ReviserSpec::head_size() const {
  int size = image_size;
  while (size > 4) size = (size - 2) / 2 + 1;
  return size;
}

int conv_output_size(int input, const std::vector<ConvGeometry>& layers) {
  int size = input;
  for (const auto& l : layers) {
    const int span = size + 2 * l.padding - l.kernel;
    if (span < 0) return 0;
    size = span / l.stride + 1;
  }
  return size;
}

int receptive_field(const std::vector<ConvGeometry>& layers) {
  int field = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) field = field * it->stride + (it->kernel - it->stride);
  return field;
}

int scoremap_size(int image_size, const PatchDiscriminatorSpec& spec) {
  return conv_output_size(image_size, spec.layers());
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

ResidualBlockImpl::ResidualBlockImpl(int width, double dropout) {
  body_->push_back(nn::ReflectionPad2d(1));
  body_->push_back(nn::Conv2d(nn::Conv2dOptions(width, width, 3).bias(false)));
  body_->push_back(nn::BatchNorm2d(width));
  body_->push_back(nn::ReLU(true));
  if (dropout > 0.0) body_->push_back(nn::Dropout(dropout));
  body_->push_back(nn::ReflectionPad2d(1));
  body_->push_back(nn::Conv2d(nn::Conv2dOptions(width, width, 3).bias(false)));
  body_->push_back(nn::BatchNorm2d(width));
  register_module("body", body_);
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

GeneratorImpl::GeneratorImpl(const GeneratorSpec& spec) : spec_(spec) {
  if (spec.base_width < 1 || spec.n_residual_blocks < 0 || spec.dropout < 0.0 || spec.dropout >= 1.0) {
    throw ConfigError("invalid generator spec");
  }
  const int w = spec.base_width;
  model_->push_back(nn::ReflectionPad2d(3));
  model_->push_back(nn::Conv2d(nn::Conv2dOptions(spec.in_channels, w, 7).bias(false)));
  model_->push_back(nn::BatchNorm2d(w));
  model_->push_back(nn::ReLU(true));

  int width = w;
  for (int i = 0; i < GeneratorSpec::kDownsampling; ++i) {
    model_->push_back(nn::Conv2d(nn::Conv2dOptions(width, width * 2, 3).stride(2).padding(1).bias(false)));
    model_->push_back(nn::BatchNorm2d(width * 2));
    model_->push_back(nn::ReLU(true));
    width *= 2;
  }
  for (int i = 0; i < spec.n_residual_blocks; ++i) model_->push_back(ResidualBlock(width, spec.dropout));

  for (int i = 0; i < GeneratorSpec::kDownsampling; ++i) {
    model_->push_back(nn::ConvTranspose2d(
        nn::ConvTranspose2dOptions(width, width / 2, 3).stride(2).padding(1).output_padding(1).bias(false)));
    model_->push_back(nn::BatchNorm2d(width / 2));
    model_->push_back(nn::ReLU(true));
    width /= 2;
  }
  model_->push_back(nn::ReflectionPad2d(3));
  model_->push_back(nn::Conv2d(nn::Conv2dOptions(width, spec.out_channels, 7)));
  model_->push_back(nn::Tanh());
  register_module("model", model_);
  init_weights(*this);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels) {
    throw ShapeError("generator expects N x " + std::to_string(spec_.in_channels) + " x H x W input");
  }
  constexpr int kFactor = 1 << GeneratorSpec::kDownsampling;
  if (x.size(2) % kFactor != 0 || x.size(3) % kFactor != 0) {
    throw ShapeError("generator input " + std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)) +
                     " is not divisible by " + std::to_string(kFactor));
  }
  return model_->forward(x);
}

// ---------------------------------------------------------------------------
// Patch discriminator
// ---------------------------------------------------------------------------

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const PatchDiscriminatorSpec& spec) : spec_(spec) {
  if (spec.base_width < 1 || spec.padding < 0) throw ConfigError("invalid patch discriminator spec");
  const auto layers = spec.layers();
  const int b = spec.base_width;
  const std::vector<int> widths{b, b * 2, b * 4, b * 8, 1};
  int in = spec.in_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const bool last = i + 1 == layers.size();
    const bool normed = i > 0 && !last;
    model_->push_back(nn::Conv2d(
        nn::Conv2dOptions(in, widths[i], l.kernel).stride(l.stride).padding(l.padding).bias(!normed)));
    if (normed) model_->push_back(nn::BatchNorm2d(widths[i]));
    if (!last) model_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)));
    in = widths[i];
  }
  model_->push_back(nn::Sigmoid());
  register_module("model", model_);
  init_weights(*this);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& condition, const torch::Tensor& candidate) {
  check_pair(condition, candidate, "patch discriminator");
  const auto h = static_cast<int>(condition.size(2));
  const auto w = static_cast<int>(condition.size(3));
  if (conv_output_size(h, spec_.layers()) < 1 || conv_output_size(w, spec_.layers()) < 1) {
    throw ShapeError("input " + std::to_string(h) + "x" + std::to_string(w) +
                     " is too small for the patch discriminator");
  }
  return model_->forward(torch::cat({condition, candidate}, 1));
}

// ---------------------------------------------------------------------------
// Reviser
// ---------------------------------------------------------------------------

ReviserImpl::ReviserImpl(const ReviserSpec& spec) : spec_(spec) {
  const auto widths = spec.stage_widths();
  int in = spec.in_channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const bool normed = i > 0;
    model_->push_back(nn::Conv2d(nn::Conv2dOptions(in, widths[i], 4).stride(2).padding(1).bias(!normed)));
    if (normed) model_->push_back(nn::BatchNorm2d(widths[i]));
    model_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2).inplace(true)));
    in = widths[i];
  }
  model_->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, spec.head_size())));
  model_->push_back(nn::Sigmoid());
  register_module("model", model_);
  init_weights(*this);
}

torch::Tensor ReviserImpl::forward_joint(const torch::Tensor& pair) {
  if (pair.dim() != 4 || pair.size(1) != spec_.in_channels) {
    throw ShapeError("reviser expects N x " + std::to_string(spec_.in_channels) + " x H x W input");
  }
  if (pair.size(2) != spec_.image_size || pair.size(3) != spec_.image_size) {
    throw ShapeError("reviser built for " + std::to_string(spec_.image_size) + "x" +
                     std::to_string(spec_.image_size) + " inputs, got " + std::to_string(pair.size(2)) + "x" +
                     std::to_string(pair.size(3)));
  }
  return model_->forward(pair).view({pair.size(0)});
}

torch::Tensor ReviserImpl::forward(const torch::Tensor& condition, const torch::Tensor& candidate) {
  check_pair(condition, candidate, "reviser");
  return forward_joint(torch::cat({condition, candidate}, 1));
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

void init_weights(nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2dImpl>()) {
      nn::init::normal_(conv->weight, 0.0, 0.02);
      if (conv->bias.defined()) nn::init::zeros_(conv->bias);
    } else if (auto* deconv = m->as<nn::ConvTranspose2dImpl>()) {
      nn::init::normal_(deconv->weight, 0.0, 0.02);
      if (deconv->bias.defined()) nn::init::zeros_(deconv->bias);
    } else if (auto* bn = m->as<nn::BatchNorm2dImpl>()) {
      nn::init::normal_(bn->weight, 1.0, 0.02);
      nn::init::zeros_(bn->bias);
    }
  }
}

torch::Tensor generate(Generator& generator, const torch::Tensor& x, std::optional<uint64_t> noise_seed) {
  if (noise_seed) torch::manual_seed(*noise_seed);
  return generator->forward(x);
}

torch::Tensor score_patches(PatchDiscriminator& discriminator, const torch::Tensor& x,
                            const torch::Tensor& candidate) {
  return discriminator->forward(x, candidate);
}

torch::Tensor revise_score(Reviser& reviser, const torch::Tensor& x, const torch::Tensor& candidate) {
  return reviser->forward(x, candidate);
}

std::vector<ScoreMap> to_score_maps(const torch::Tensor& scores, int source_image_size) {
  if (scores.dim() != 4 || scores.size(1) != 1 || scores.size(2) != scores.size(3)) {
    throw ShapeError("score tensor must be N x 1 x s x s");
  }
  const auto clamped = scores.detach()
                           .to(torch::kCPU, torch::kDouble)
                           .clamp(kProbabilityFloor, 1.0 - kProbabilityFloor)
                           .contiguous();
  const auto side = static_cast<int>(scores.size(2));
  const auto cells = static_cast<std::size_t>(side) * side;
  std::vector<ScoreMap> maps;
  maps.reserve(static_cast<std::size_t>(scores.size(0)));
  const double* data = clamped.data_ptr<double>();
  for (int64_t i = 0; i < scores.size(0); ++i) {
    const double* begin = data + static_cast<std::size_t>(i) * cells;
    maps.emplace_back(side, std::vector<double>(begin, begin + cells), source_image_size);
  }
  return maps;
}

int64_t parameter_count(const nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace drpan
