#pragma once

#include <cstdint>
#include <utility>

#include <torch/torch.h>

#include "drpan/models.hpp"

namespace drpan {

// Log arguments are clamped to [kLogClamp, 1 - kLogClamp].
inline constexpr double kLogClamp = 1e-7;

struct ObjectiveWeights {
  double alpha = 10.0;        // gradient-penalty coefficient
  double beta = 100.0;        // full-image L1
  double gamma = 100.0;       // discriminative-region L1
  double lambda = 0.5;        // reviser share of the adversarial pressure on G
  double delta_scale = 0.5;   // perturbation magnitude for the penalty inputs

  void validate() const;
};

// How the adversarial terms of the generator loss are written.
enum class GeneratorForm {
  kNonSaturating,  // -E log D(fake): G pushes the critics toward "real"
  kLiteral,        // -E log(1 - D(fake)) as printed in the original objective
};

// One training step's worth of scalar telemetry.
struct LossReport {
  double d_loss = 0.0;
  double r_loss = 0.0;
  double g_adv_patch = 0.0;
  double g_adv_reviser = 0.0;
  double l1_full = 0.0;
  double l1_region = 0.0;
  double penalty = 0.0;
  double total_g = 0.0;
  double scoremap_mean = 0.0;

  bool all_finite() const;
};

// -E[log D(x,y)] - E[log(1 - D(x,G(x)))], averaged over cells and batch.
torch::Tensor patch_d_loss(const torch::Tensor& scores_real, const torch::Tensor& scores_fake);

// Adversarial part of the reviser loss (no penalty).
torch::Tensor reviser_adversarial_loss(const torch::Tensor& p_real, const torch::Tensor& p_masked_fake);

// alpha * E[(||grad|| - 1)^2].
torch::Tensor gradient_penalty(const torch::Tensor& grad_norms, double alpha);

// Adversarial part plus gradient penalty.
torch::Tensor reviser_loss(const torch::Tensor& p_real, const torch::Tensor& p_masked_fake,
                           const torch::Tensor& grad_norms, double alpha);

// (beta * mean|y - G(x)|, gamma * mean|y_r - crop(G(x))|).
std::pair<torch::Tensor, torch::Tensor> l1_terms(const torch::Tensor& real, const torch::Tensor& fake,
                                                 const torch::Tensor& real_crop, const torch::Tensor& fake_crop,
                                                 const ObjectiveWeights& weights);

// Unweighted generator-side adversarial term of one critic.
torch::Tensor generator_adversarial(const torch::Tensor& probabilities, GeneratorForm form);

// (1 - lambda) * adv(D_p) + lambda * adv(R) + l1_full + l1_region.
torch::Tensor generator_loss(const torch::Tensor& scores_fake, const torch::Tensor& p_masked_fake,
                             const torch::Tensor& l1_full, const torch::Tensor& l1_region,
                             const ObjectiveWeights& weights, GeneratorForm form = GeneratorForm::kNonSaturating);

// x + delta with delta = delta_scale * std(x) * U[0, 1) elementwise, drawn from
// a generator seeded with `seed`.
torch::Tensor gradient_penalty_inputs(const torch::Tensor& x, double delta_scale, uint64_t seed);

// Per-sample ||d R / d input|| at `joint_input` (N x C x H x W, condition and
// candidate already concatenated). The returned norms stay differentiable with
// respect to the reviser parameters.
torch::Tensor input_gradient_norms(Reviser& reviser, const torch::Tensor& joint_input);

}  // namespace drpan
