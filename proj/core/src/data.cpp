#include "drpan/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <opencv2/imgproc.hpp>

#include "drpan/error.hpp"
#include "drpan/image_io.hpp"

namespace drpan {

namespace fs = std::filesystem;

PairedDataset::PairedDataset(std::vector<PairedSample> samples) : samples_(std::move(samples)) {
  for (const auto& s : samples_) {
    if (s.condition.sizes() != s.target.sizes()) throw ShapeError("sample " + s.id + ": x and y differ in shape");
    if (s.condition.sizes() != samples_.front().condition.sizes()) {
      throw ShapeError("sample " + s.id + ": shape differs from the rest of the dataset");
    }
  }
}

int PairedDataset::resolution() const { return empty() ? 0 : static_cast<int>(samples_.front().condition.size(1)); }

int PairedDataset::channels() const { return empty() ? 0 : static_cast<int>(samples_.front().condition.size(0)); }

Batch PairedDataset::batch(std::span<const std::size_t> indices, const std::vector<bool>& flip) const {
  if (indices.empty()) throw ShapeError("empty batch");
  if (!flip.empty() && flip.size() != indices.size()) throw ShapeError("flip mask must match the batch");
  Batch b;
  std::vector<torch::Tensor> xs;
  std::vector<torch::Tensor> ys;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& s = samples_.at(indices[k]);
    const bool mirror = !flip.empty() && flip[k];
    xs.push_back(mirror ? s.condition.flip({2}) : s.condition);
    ys.push_back(mirror ? s.target.flip({2}) : s.target);
    b.ids.push_back(s.id);
  }
  b.x = torch::stack(xs);
  b.y = torch::stack(ys);
  return b;
}

PairedDataset PairedDataset::subset(std::size_t begin, std::size_t count) const {
  if (begin + count > samples_.size()) throw RangeError("subset outside dataset");
  return PairedDataset(std::vector<PairedSample>(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                 samples_.begin() + static_cast<std::ptrdiff_t>(begin + count)));
}

PairedSample split_pair(const cv::Mat& side_by_side, int resolution, std::string id) {
  if (side_by_side.empty()) throw ShapeError(id + ": empty image");
  if (side_by_side.cols % 2 != 0) throw ShapeError(id + ": odd width " + std::to_string(side_by_side.cols));
  if (resolution < 1) throw ConfigError("resolution must be positive");
  const int half = side_by_side.cols / 2;
  const auto prepare = [&](const cv::Mat& part) {
    if (part.cols == resolution && part.rows == resolution) return mat_to_tensor(part.clone());
    cv::Mat resized;
    const bool shrinking = part.cols > resolution || part.rows > resolution;
    cv::resize(part, resized, cv::Size(resolution, resolution), 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
    return mat_to_tensor(resized);
  };
  PairedSample s;
  s.condition = prepare(side_by_side(cv::Rect(0, 0, half, side_by_side.rows)));
  s.target = prepare(side_by_side(cv::Rect(half, 0, half, side_by_side.rows)));
  s.id = std::move(id);
  return s;
}

PairedDataset load_paired_dir(const fs::path& dir, int resolution) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());

  std::vector<fs::path> files;
  const fs::path manifest = dir / "manifest.txt";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      files.push_back(dir / (line + ".png"));
    }
  } else {
    const std::set<std::string> exts{".png", ".jpg", ".jpeg"};
    for (const auto& entry : fs::directory_iterator(dir)) {
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (entry.is_regular_file() && exts.count(ext)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw IoError("no paired images in " + dir.string());

  std::vector<PairedSample> samples;
  samples.reserve(files.size());
  for (const auto& f : files) samples.push_back(split_pair(read_image(f), resolution, f.stem().string()));
  return PairedDataset(std::move(samples));
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, uint64_t seed,
                                                    uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(epoch),
                    static_cast<uint32_t>(epoch >> 32), 0x5348u};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  return batches;
}

void ToyTaskSpec::validate() const {
  if (image_size < 16) throw ConfigError("toy image_size must be >= 16");
  if (min_shapes < 1 || max_shapes < min_shapes) throw ConfigError("toy shape count range is empty");
  if (palette.empty()) throw ConfigError("toy palette is empty");
}

cv::Mat render_toy_pair(const ToyTaskSpec& spec, uint64_t index_seed) {
  spec.validate();
  std::seed_seq seq{static_cast<uint32_t>(spec.seed), static_cast<uint32_t>(spec.seed >> 32),
                    static_cast<uint32_t>(index_seed), static_cast<uint32_t>(index_seed >> 32)};
  std::mt19937_64 rng(seq);
  const int n = spec.image_size;
  const auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  cv::Mat edges(n, n, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::Mat filled(n, n, CV_8UC3, cv::Scalar(255, 255, 255));
  const int shapes = uniform(spec.min_shapes, spec.max_shapes);
  const int min_side = std::max(6, n / 5);
  const int max_side = std::max(min_side, n * 3 / 5);
  for (int i = 0; i < shapes; ++i) {
    const auto& rgb = spec.palette[static_cast<std::size_t>(uniform(0, static_cast<int>(spec.palette.size()) - 1))];
    const cv::Scalar color(rgb[2], rgb[1], rgb[0]);
    const int w = uniform(min_side, max_side);
    const int h = uniform(min_side, max_side);
    const int x = uniform(1, n - w - 2);
    const int y = uniform(1, n - h - 2);
    if (uniform(0, 1) == 0) {
      cv::rectangle(edges, cv::Rect(x, y, w, h), color, 1, cv::LINE_AA);
      cv::rectangle(filled, cv::Rect(x, y, w, h), color, cv::FILLED, cv::LINE_AA);
    } else {
      const cv::Point center(x + w / 2, y + h / 2);
      const cv::Size axes(w / 2, h / 2);
      cv::ellipse(edges, center, axes, 0.0, 0.0, 360.0, color, 1, cv::LINE_AA);
      cv::ellipse(filled, center, axes, 0.0, 0.0, 360.0, color, cv::FILLED, cv::LINE_AA);
    }
  }
  cv::Mat pair;
  cv::hconcat(edges, filled, pair);
  return pair;
}

std::vector<std::string> make_toy_dataset(const ToyTaskSpec& spec, int n, const fs::path& dir) {
  spec.validate();
  if (n < 0) throw ConfigError("sample count must be >= 0");
  std::vector<std::string> ids;
  if (n == 0) return ids;
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in " + dir.string());
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "toy_%05d", i);
    write_png(dir / (std::string(name) + ".png"), render_toy_pair(spec, static_cast<uint64_t>(i)));
    ids.emplace_back(name);
    manifest << name << '\n';
  }
  return ids;
}

}  // namespace drpan
