#include "drpan/objectives.hpp"

#include <cmath>
#include <string>

#include "drpan/error.hpp"

namespace drpan {

namespace {

void check_probabilities(const torch::Tensor& p, const char* who) {
  if (!p.defined() || p.numel() == 0) throw ShapeError(std::string(who) + ": empty probability tensor");
  const auto d = p.detach();
  if (!torch::isfinite(d).all().item<bool>() || d.min().item<double>() < 0.0 || d.max().item<double>() > 1.0) {
    throw RangeError(std::string(who) + ": probabilities must lie in [0, 1]");
  }
}

torch::Tensor safe_log(const torch::Tensor& p) { return torch::log(p.clamp(kLogClamp, 1.0 - kLogClamp)); }

torch::Tensor safe_log1m(const torch::Tensor& p) {
  return torch::log(1.0 - p.clamp(kLogClamp, 1.0 - kLogClamp));
}

}  // namespace

void ObjectiveWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0 || delta_scale < 0) throw ConfigError("objective weights must be >= 0");
  if (lambda < 0 || lambda > 1) throw ConfigError("lambda must lie in [0, 1]");
}

bool LossReport::all_finite() const {
  for (double v : {d_loss, r_loss, g_adv_patch, g_adv_reviser, l1_full, l1_region, penalty, total_g, scoremap_mean}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

torch::Tensor patch_d_loss(const torch::Tensor& scores_real, const torch::Tensor& scores_fake) {
  if (scores_real.sizes() != scores_fake.sizes()) throw ShapeError("patch_d_loss: score maps differ in shape");
  check_probabilities(scores_real, "patch_d_loss");
  check_probabilities(scores_fake, "patch_d_loss");
  return -safe_log(scores_real).mean() - safe_log1m(scores_fake).mean();
}

torch::Tensor reviser_adversarial_loss(const torch::Tensor& p_real, const torch::Tensor& p_masked_fake) {
  check_probabilities(p_real, "reviser_loss");
  check_probabilities(p_masked_fake, "reviser_loss");
  return -safe_log(p_real).mean() - safe_log1m(p_masked_fake).mean();
}

torch::Tensor gradient_penalty(const torch::Tensor& grad_norms, double alpha) {
  if (!grad_norms.defined() || grad_norms.numel() == 0) throw ShapeError("gradient_penalty: no gradient norms");
  if (grad_norms.detach().min().item<double>() < 0.0) throw RangeError("gradient norms must be >= 0");
  return alpha * (grad_norms - 1.0).pow(2).mean();
}

torch::Tensor reviser_loss(const torch::Tensor& p_real, const torch::Tensor& p_masked_fake,
                           const torch::Tensor& grad_norms, double alpha) {
  return reviser_adversarial_loss(p_real, p_masked_fake) + gradient_penalty(grad_norms, alpha);
}

std::pair<torch::Tensor, torch::Tensor> l1_terms(const torch::Tensor& real, const torch::Tensor& fake,
                                                 const torch::Tensor& real_crop, const torch::Tensor& fake_crop,
                                                 const ObjectiveWeights& weights) {
  if (real.sizes() != fake.sizes()) throw ShapeError("l1_terms: image shapes differ");
  if (real_crop.sizes() != fake_crop.sizes()) throw ShapeError("l1_terms: crop shapes differ");
  return {weights.beta * (real - fake).abs().mean(), weights.gamma * (real_crop - fake_crop).abs().mean()};
}

torch::Tensor generator_adversarial(const torch::Tensor& probabilities, GeneratorForm form) {
  check_probabilities(probabilities, "generator_loss");
  return form == GeneratorForm::kNonSaturating ? -safe_log(probabilities).mean()
                                               : -safe_log1m(probabilities).mean();
}

torch::Tensor generator_loss(const torch::Tensor& scores_fake, const torch::Tensor& p_masked_fake,
                             const torch::Tensor& l1_full, const torch::Tensor& l1_region,
                             const ObjectiveWeights& weights, GeneratorForm form) {
  weights.validate();
  torch::Tensor total = l1_full + l1_region;
  const double patch_weight = 1.0 - weights.lambda;
  if (patch_weight > 0.0) {
    if (!scores_fake.defined()) throw ShapeError("generator_loss: patch scores required when lambda < 1");
    total = total + patch_weight * generator_adversarial(scores_fake, form);
  }
  if (weights.lambda > 0.0) {
    if (!p_masked_fake.defined()) throw ShapeError("generator_loss: reviser scores required when lambda > 0");
    total = total + weights.lambda * generator_adversarial(p_masked_fake, form);
  }
  return total;
}

torch::Tensor gradient_penalty_inputs(const torch::Tensor& x, double delta_scale, uint64_t seed) {
  if (delta_scale == 0.0) return x.clone();
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto u = torch::rand(x.sizes(), gen, torch::TensorOptions().dtype(x.dtype()));
  const auto sigma = x.detach().std();
  return x + delta_scale * sigma * u.to(x.device());
}

torch::Tensor input_gradient_norms(Reviser& reviser, const torch::Tensor& joint_input) {
  auto input = joint_input.detach().requires_grad_(true);
  const auto out = reviser->forward_joint(input);
  const auto grads = torch::autograd::grad({out.sum()}, {input}, /*grad_outputs=*/{}, /*retain_graph=*/true,
                                           /*create_graph=*/true)[0];
  return grads.reshape({grads.size(0), -1}).norm(2, 1);
}

}  // namespace drpan
