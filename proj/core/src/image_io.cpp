#include "drpan/image_io.hpp"

#include <cstring>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "drpan/error.hpp"

namespace drpan {

torch::Tensor mat_to_tensor(const cv::Mat& image) {
  if (image.empty() || image.depth() != CV_8U || (image.channels() != 1 && image.channels() != 3)) {
    throw ShapeError("expected a non-empty 8-bit gray or BGR image");
  }
  cv::Mat rgb;
  if (image.channels() == 3) {
    cv::cvtColor(image, rgb, cv::COLOR_BGR2RGB);
  } else {
    rgb = image.clone();
  }
  if (!rgb.isContinuous()) rgb = rgb.clone();
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, rgb.channels()}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).contiguous().to(torch::kFloat).div(127.5).sub(1.0);
}

cv::Mat tensor_to_mat(const torch::Tensor& chw) {
  if (chw.dim() != 3 || (chw.size(0) != 1 && chw.size(0) != 3)) throw ShapeError("expected a 1 or 3 x H x W tensor");
  const auto bytes = chw.detach()
                         .to(torch::kCPU, torch::kFloat)
                         .add(1.0)
                         .mul(127.5)
                         .round()
                         .clamp(0, 255)
                         .to(torch::kUInt8)
                         .permute({1, 2, 0})
                         .contiguous();
  const int channels = static_cast<int>(chw.size(0));
  cv::Mat rgb(static_cast<int>(chw.size(1)), static_cast<int>(chw.size(2)), CV_8UC(channels));
  std::memcpy(rgb.data, bytes.data_ptr<uint8_t>(), static_cast<std::size_t>(bytes.numel()));
  if (channels == 1) return rgb;
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

cv::Mat read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
  cv::Mat image = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (image.empty()) throw IoError("unreadable image: " + path.string());
  return image;
}

void write_png(const std::filesystem::path& path, const cv::Mat& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), image)) throw IoError("cannot write " + path.string());
}

cv::Mat tile_grid(const std::vector<std::vector<torch::Tensor>>& rows) {
  std::vector<cv::Mat> stacked;
  for (const auto& row : rows) {
    std::vector<cv::Mat> tiles;
    for (const auto& t : row) {
      cv::Mat m = tensor_to_mat(t);
      if (m.channels() == 1) cv::cvtColor(m, m, cv::COLOR_GRAY2BGR);
      tiles.push_back(m);
    }
    if (tiles.empty()) continue;
    cv::Mat line;
    cv::hconcat(tiles, line);
    stacked.push_back(line);
  }
  if (stacked.empty()) throw ShapeError("tile_grid: nothing to draw");
  cv::Mat grid;
  cv::vconcat(stacked, grid);
  return grid;
}

cv::Mat scoremap_heatmap(const ScoreMap& map, int image_size, const Region& region) {
  cv::Mat cells(map.size(), map.size(), CV_8UC1);
  for (int r = 0; r < map.size(); ++r) {
    for (int c = 0; c < map.size(); ++c) cells.at<uint8_t>(r, c) = cv::saturate_cast<uint8_t>(map.at(r, c) * 255.0);
  }
  cv::Mat up;
  cv::resize(cells, up, cv::Size(image_size, image_size), 0, 0, cv::INTER_NEAREST);
  cv::Mat color;
  cv::cvtColor(up, color, cv::COLOR_GRAY2BGR);
  cv::rectangle(color, cv::Point(region.x0, region.y0), cv::Point(region.x1() - 1, region.y1() - 1),
                cv::Scalar(0, 0, 255), 1);
  return color;
}

}  // namespace drpan
