#include "drpan/fake_mask.hpp"

#include <string>

#include "drpan/error.hpp"

namespace drpan {

namespace {

void check_bounds(const Region& r, int64_t height, int64_t width) {
  if (r.side < 1 || r.x0 < 0 || r.y0 < 0 || r.x1() > width || r.y1() > height) {
    throw RangeError("region [" + std::to_string(r.x0) + "," + std::to_string(r.x1()) + ")x[" +
                     std::to_string(r.y0) + "," + std::to_string(r.y1()) + ") outside " + std::to_string(width) +
                     "x" + std::to_string(height) + " image");
  }
}

}  // namespace

torch::Tensor region_mask(std::span<const Region> regions, int64_t height, int64_t width) {
  auto mask = torch::zeros({static_cast<int64_t>(regions.size()), 1, height, width}, torch::kBool);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    check_bounds(r, height, width);
    mask[static_cast<int64_t>(i)][0].narrow(0, r.y0, r.side).narrow(1, r.x0, r.side).fill_(true);
  }
  return mask;
}

torch::Tensor crop(const torch::Tensor& image, const Region& region) {
  if (image.dim() != 3) throw ShapeError("crop expects a C x H x W image");
  check_bounds(region, image.size(1), image.size(2));
  return image.narrow(1, region.y0, region.side).narrow(2, region.x0, region.side);
}

torch::Tensor crop_batch(const torch::Tensor& images, std::span<const Region> regions) {
  if (images.dim() != 4) throw ShapeError("crop_batch expects an N x C x H x W batch");
  if (images.size(0) != static_cast<int64_t>(regions.size())) {
    throw ShapeError("crop_batch: " + std::to_string(regions.size()) + " regions for batch of " +
                     std::to_string(images.size(0)));
  }
  if (regions.empty()) throw ShapeError("crop_batch: empty batch");
  std::vector<torch::Tensor> crops;
  crops.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].side != regions.front().side) throw ShapeError("crop_batch: regions differ in side length");
    crops.push_back(crop(images[static_cast<int64_t>(i)], regions[i]));
  }
  return torch::stack(crops);
}

MaskedPair composite(const torch::Tensor& real, const torch::Tensor& fake, std::span<const Region> regions) {
  if (real.dim() != 4 || real.sizes() != fake.sizes()) {
    throw ShapeError("composite: real and fake must be N x C x H x W batches of equal shape");
  }
  const auto mask = region_mask(regions, real.size(2), real.size(3));
  if (mask.size(0) != real.size(0)) throw ShapeError("composite: one region per sample required");

  MaskedPair out;
  out.masked_fake = torch::where(mask, fake, real);
  out.regions.assign(regions.begin(), regions.end());
  out.real_crop = crop_batch(real, regions);
  out.fake_crop = crop_batch(fake, regions);
  return out;
}

MaskedPair composite(const torch::Tensor& real, const torch::Tensor& fake, const Region& region) {
  const std::vector<Region> regions(real.dim() == 4 ? static_cast<std::size_t>(real.size(0)) : 0, region);
  return composite(real, fake, regions);
}

}  // namespace drpan
