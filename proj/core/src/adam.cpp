#include "drpan/adam.hpp"

#include <cmath>

#include "drpan/error.hpp"

namespace drpan {

Adam::Adam(std::vector<torch::Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  exp_avg_.reserve(params_.size());
  exp_avg_sq_.reserve(params_.size());
  for (const auto& p : params_) {
    exp_avg_.push_back(torch::zeros_like(p, torch::MemoryFormat::Contiguous));
    exp_avg_sq_.push_back(torch::zeros_like(p, torch::MemoryFormat::Contiguous));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    if (p.grad().defined()) p.mutable_grad().reset();
  }
}

void Adam::step() {
  torch::NoGradGuard no_grad;
  ++steps_;
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  const double step_size = options_.lr / bias1;
  const double bias2_sqrt = std::sqrt(bias2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.grad().defined()) continue;
    const auto& g = p.grad();
    exp_avg_[i].mul_(options_.beta1).add_(g, 1.0 - options_.beta1);
    exp_avg_sq_[i].mul_(options_.beta2).addcmul_(g, g, 1.0 - options_.beta2);
    const auto denom = (exp_avg_sq_[i].sqrt() / bias2_sqrt).add_(options_.eps);
    p.addcdiv_(exp_avg_[i], denom, -step_size);
  }
}

std::vector<NamedTensor> Adam::state() const {
  std::vector<NamedTensor> out;
  out.push_back({"steps", torch::tensor({steps_}, torch::kLong)});
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.push_back({"exp_avg." + std::to_string(i), exp_avg_[i]});
    out.push_back({"exp_avg_sq." + std::to_string(i), exp_avg_sq_[i]});
  }
  return out;
}

void Adam::load_state(const std::vector<NamedTensor>& state) {
  if (state.size() != 1 + 2 * params_.size()) throw IoError("optimizer state does not match its parameters");
  torch::NoGradGuard no_grad;
  for (const auto& t : state) {
    if (t.name == "steps") {
      steps_ = t.value.item<int64_t>();
      continue;
    }
    const auto dot = t.name.find('.');
    const auto kind = t.name.substr(0, dot);
    const auto index = static_cast<std::size_t>(std::stoul(t.name.substr(dot + 1)));
    if (index >= params_.size()) throw IoError("optimizer state index out of range");
    auto& dst = kind == "exp_avg" ? exp_avg_[index] : exp_avg_sq_[index];
    if (dst.sizes() != t.value.sizes()) throw ShapeError("optimizer state " + t.name + " has the wrong shape");
    dst.copy_(t.value);
  }
}

}  // namespace drpan
