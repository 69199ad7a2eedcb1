#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace drpan {

// Condition x and target y, both C x H x W in [-1, 1].
struct PairedSample {
  torch::Tensor condition;
  torch::Tensor target;
  std::string id;
};

struct Batch {
  torch::Tensor x;  // N x C x H x W
  torch::Tensor y;
  std::vector<std::string> ids;
};

// Immutable, ordered collection of paired samples at one resolution.
class PairedDataset {
 public:
  PairedDataset() = default;
  explicit PairedDataset(std::vector<PairedSample> samples);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const PairedSample& operator[](std::size_t i) const { return samples_.at(i); }
  const std::vector<PairedSample>& samples() const { return samples_; }
  int resolution() const;
  int channels() const;

  // Stacks the selected samples. `flip` mirrors both x and y horizontally.
  Batch batch(std::span<const std::size_t> indices, const std::vector<bool>& flip = {}) const;
  PairedDataset subset(std::size_t begin, std::size_t count) const;

 private:
  std::vector<PairedSample> samples_;
};

// Splits a side-by-side A|B image at the horizontal midpoint and resizes each
// half to resolution x resolution.
PairedSample split_pair(const cv::Mat& side_by_side, int resolution, std::string id);

// Loads every pair listed in <dir>/manifest.txt, or every *.png / *.jpg in
// name order when there is no manifest. Empty directories are an error.
PairedDataset load_paired_dir(const std::filesystem::path& dir, int resolution);

// Shuffled index batches for one epoch. The order depends only on
// (n, batch_size, seed, epoch); the last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, uint64_t seed,
                                                    uint64_t epoch);

// Edge-to-filled-shape toy task: the condition is a white canvas with
// anti-aliased outlines of random rectangles and ellipses drawn in their
// palette colors; the target has the same shapes filled with those colors.
struct ToyTaskSpec {
  int image_size = 64;
  int min_shapes = 1;
  int max_shapes = 3;
  std::vector<std::array<uint8_t, 3>> palette{{230, 25, 75}, {60, 180, 75}, {0, 130, 200},
                                              {245, 130, 48}, {145, 30, 180}, {70, 70, 70}};
  uint64_t seed = 0;

  void validate() const;
};

// Renders one pair as a side-by-side BGR image (condition | target).
cv::Mat render_toy_pair(const ToyTaskSpec& spec, uint64_t index_seed);

// Writes n pairs as <dir>/toy_NNNNN.png plus <dir>/manifest.txt and returns
// the identifiers. Identical spec and n give byte-identical files.
std::vector<std::string> make_toy_dataset(const ToyTaskSpec& spec, int n, const std::filesystem::path& dir);

}  // namespace drpan
