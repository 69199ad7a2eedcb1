#pragma once

#include <filesystem>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "drpan/error.hpp"
#include "drpan/metrics.hpp"

namespace drpan::testkit {

// Reference values for fixture_a.png vs fixture_b.png, produced by
// tests/fixtures/make_metric_fixture.py (numpy PSNR, scikit-image SSIM on luma).
inline constexpr double kFixturePsnr = 30.067519717497;
inline constexpr double kFixtureSsim = 0.851906155127;

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(DRPAN_FIXTURE_DIR) / name;
}

// 8-bit PNG -> planar RGB metric image on the 0..255 scale.
inline metrics::Image load_fixture(const std::string& name) {
  const cv::Mat bgr = cv::imread(fixture_path(name).string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("missing fixture " + name);
  metrics::Image img(3, bgr.rows, bgr.cols, 0.0);
  for (int y = 0; y < bgr.rows; ++y) {
    for (int x = 0; x < bgr.cols; ++x) {
      const auto& px = bgr.at<cv::Vec3b>(y, x);
      img.at(0, y, x) = px[2];
      img.at(1, y, x) = px[1];
      img.at(2, y, x) = px[0];
    }
  }
  return img;
}

}  // namespace drpan::testkit
