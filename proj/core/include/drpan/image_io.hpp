#pragma once

#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "drpan/region_proposal.hpp"

namespace drpan {

// 8-bit RGB/gray cv::Mat (OpenCV BGR order for 3 channels) <-> C x H x W float
// tensor in [-1, 1]. Normalization is v / 127.5 - 1; the inverse rounds to the
// nearest level.
torch::Tensor mat_to_tensor(const cv::Mat& bgr_or_gray);
cv::Mat tensor_to_mat(const torch::Tensor& chw);

cv::Mat read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const cv::Mat& image);

// Rows of tiles, left to right. All tensors are C x H x W in [-1, 1].
cv::Mat tile_grid(const std::vector<std::vector<torch::Tensor>>& rows);

// Gray heatmap of the score map (dark = fake) upsampled to the image size,
// with the proposed region drawn as a red rectangle.
cv::Mat scoremap_heatmap(const ScoreMap& map, int image_size, const Region& region);

}  // namespace drpan
