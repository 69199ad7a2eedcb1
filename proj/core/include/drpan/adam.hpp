#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "drpan/checkpoint.hpp"

namespace drpan {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer over a fixed parameter list, with the same update
// rule as torch.optim.Adam (no weight decay, no amsgrad). Its state is plain
// tensors so it serializes bit-exactly with the rest of a checkpoint.
class Adam {
 public:
  Adam(std::vector<torch::Tensor> params, AdamOptions options);

  void zero_grad();
  void step();

  int64_t steps() const { return steps_; }
  const std::vector<torch::Tensor>& params() const { return params_; }

  std::vector<NamedTensor> state() const;
  void load_state(const std::vector<NamedTensor>& state);

 private:
  std::vector<torch::Tensor> params_;
  std::vector<torch::Tensor> exp_avg_;
  std::vector<torch::Tensor> exp_avg_sq_;
  AdamOptions options_;
  int64_t steps_ = 0;
};

}  // namespace drpan
