#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "drpan/region_proposal.hpp"

namespace drpan {

// Real target with the generated discriminative region pasted in, plus the
// matching real and fake crops used by the region L1 term.
struct MaskedPair {
  torch::Tensor masked_fake;  // N x C x H x W
  std::vector<Region> regions;
  torch::Tensor real_crop;  // N x C x side x side
  torch::Tensor fake_crop;
};

// Hard paste, one region per sample. Inside each box the result is the fake
// pixel (and carries its gradient); outside it is the real pixel. All regions
// of a batch must share one side length.
MaskedPair composite(const torch::Tensor& real, const torch::Tensor& fake, std::span<const Region> regions);

// Same region for every sample of the batch.
MaskedPair composite(const torch::Tensor& real, const torch::Tensor& fake, const Region& region);

// C x H x W -> C x side x side.
torch::Tensor crop(const torch::Tensor& image, const Region& region);

// N x C x H x W -> N x C x side x side with per-sample regions.
torch::Tensor crop_batch(const torch::Tensor& images, std::span<const Region> regions);

// Boolean N x 1 x H x W mask that is true inside each sample's box.
torch::Tensor region_mask(std::span<const Region> regions, int64_t height, int64_t width);

}  // namespace drpan
