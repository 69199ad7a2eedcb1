#pragma once

#include <string>
#include <vector>

namespace drpan::metrics {

inline constexpr double kPsnrCap = 100.0;

// Planar (C x H x W) image with double pixels, usually on a 0..255 scale.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int c, int h, int w, std::vector<double> data);
  Image(int c, int h, int w, double fill);

  double at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

struct MetricResult {
  std::string name;
  std::vector<double> per_sample;
  double mean = 0.0;
};

// 10 log10(peak^2 / MSE) over all channels; kPsnrCap when the images match.
double psnr(const Image& a, const Image& b, double peak = 255.0);

// Rec. 601 luma of a 3-channel image; single-channel images pass through.
Image luma(const Image& image);

// Mean SSIM over all valid 11x11 Gaussian (sigma 1.5) windows of the luma
// planes, with C1 = (0.01 peak)^2 and C2 = (0.03 peak)^2.
double ssim(const Image& a, const Image& b, double peak = 255.0);

MetricResult summarize(std::string name, std::vector<double> values);

}  // namespace drpan::metrics
