#include "drpan/metrics.hpp"

#include <array>
#include <cmath>
#include <numeric>

#include "drpan/error.hpp"

namespace drpan::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

void check_same(const Image& a, const Image& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw ShapeError("metric inputs differ in shape");
  }
  if (a.pixels.empty()) throw ShapeError("metric inputs are empty");
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// 'valid' separable Gaussian filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w) {
  static const auto taps = gaussian_taps();
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[static_cast<std::size_t>(k)] * plane[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

Image::Image(int c, int h, int w, std::vector<double> data) : channels(c), height(h), width(w), pixels(std::move(data)) {
  if (c < 1 || h < 1 || w < 1 || pixels.size() != static_cast<std::size_t>(c) * h * w) {
    throw ShapeError("image data does not match its C x H x W shape");
  }
}

Image::Image(int c, int h, int w, double fill)
    : Image(c, h, w, std::vector<double>(static_cast<std::size_t>(c) * h * w, fill)) {}

double psnr(const Image& a, const Image& b, double peak) {
  check_same(a, b);
  if (!(peak > 0.0)) throw RangeError("psnr peak must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

Image luma(const Image& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) throw ShapeError("luma expects 1 or 3 channels");
  Image out(1, image.height, image.width, 0.0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      out.at(0, y, x) = 0.299 * image.at(0, y, x) + 0.587 * image.at(1, y, x) + 0.114 * image.at(2, y, x);
    }
  }
  return out;
}

double ssim(const Image& a, const Image& b, double peak) {
  check_same(a, b);
  if (a.height < kWindow || a.width < kWindow) {
    throw ShapeError("ssim needs images of at least " + std::to_string(kWindow) + "x" + std::to_string(kWindow));
  }
  const Image ya = luma(a);
  const Image yb = luma(b);
  const int h = ya.height;
  const int w = ya.width;

  std::vector<double> aa(ya.pixels.size());
  std::vector<double> bb(ya.pixels.size());
  std::vector<double> ab(ya.pixels.size());
  for (std::size_t i = 0; i < ya.pixels.size(); ++i) {
    aa[i] = ya.pixels[i] * ya.pixels[i];
    bb[i] = yb.pixels[i] * yb.pixels[i];
    ab[i] = ya.pixels[i] * yb.pixels[i];
  }
  const auto mu_a = filter_valid(ya.pixels, h, w);
  const auto mu_b = filter_valid(yb.pixels, h, w);
  const auto e_aa = filter_valid(aa, h, w);
  const auto e_bb = filter_valid(bb, h, w);
  const auto e_ab = filter_valid(ab, h, w);

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

MetricResult summarize(std::string name, std::vector<double> values) {
  MetricResult r;
  r.name = std::move(name);
  r.mean = values.empty() ? 0.0 : std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  r.per_sample = std::move(values);
  return r;
}

}  // namespace drpan::metrics
