#include "drpan/region_proposal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "drpan/error.hpp"

namespace drpan {

void GeometryConfig::validate() const {
  if (region_size < 1) throw ConfigError("region_size must be >= 1, got " + std::to_string(region_size));
  if (image_size <= region_size) {
    throw ConfigError("image_size (" + std::to_string(image_size) + ") must exceed region_size (" +
                      std::to_string(region_size) + ")");
  }
  if (scoremap_size < 2) throw ConfigError("scoremap_size must be >= 2, got " + std::to_string(scoremap_size));
}

ScoreMap::ScoreMap(int size, std::vector<double> values, int source_image_size)
    : size_(size), source_image_size_(source_image_size), values_(std::move(values)) {
  if (size_ < 1) throw ShapeError("score map must be non-empty");
  if (values_.size() != static_cast<std::size_t>(size_) * size_) {
    throw ShapeError("score map of side " + std::to_string(size_) + " needs " + std::to_string(size_ * size_) +
                     " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!(v > 0.0 && v < 1.0)) throw RangeError("score map values must lie strictly inside (0, 1)");
  }
}

double ScoreMap::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

Region Region::from_box(int x0, int y0, int side) {
  Region r;
  r.x0 = x0;
  r.y0 = y0;
  r.side = side;
  r.center_x = x0 + side / 2.0;
  r.center_y = y0 + side / 2.0;
  return r;
}

int window_size(const GeometryConfig& cfg) {
  cfg.validate();

  // Exact integer round-half-to-even of region_size * scoremap_size / image_size.
  const long long num = static_cast<long long>(cfg.region_size) * cfg.scoremap_size;
  const long long den = cfg.image_size;
  long long q = num / den;
  const long long twice_rem = 2 * (num % den);
  if (twice_rem > den || (twice_rem == den && (q % 2) == 1)) ++q;

  return static_cast<int>(std::clamp<long long>(q, 1, cfg.scoremap_size - 1));
}

double scale_factor(const GeometryConfig& cfg, int window) {
  if (window >= cfg.scoremap_size) {
    throw RangeError("scale factor undefined: window " + std::to_string(window) + " >= scoremap_size " +
                     std::to_string(cfg.scoremap_size));
  }
  return static_cast<double>(cfg.image_size - cfg.region_size) / static_cast<double>(cfg.scoremap_size - window);
}

PixelPoint map_center(PixelPoint window_center, double scale) {
  return {scale * window_center.x, scale * window_center.y};
}

WindowHit find_min_window(const ScoreMap& map, int window) {
  const int n = map.size();
  if (window < 1 || window > n) {
    throw RangeError("window " + std::to_string(window) + " outside [1, " + std::to_string(n) + "]");
  }
  const int positions = n - window + 1;

  // Separable box sums. Every window sum is accumulated left-to-right then
  // top-to-bottom from scratch (no running update), so equal cell contents
  // always produce bit-identical sums and ties resolve purely by position.
  std::vector<double> row_sums(static_cast<std::size_t>(n) * positions);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < positions; ++c) {
      double s = 0.0;
      for (int k = 0; k < window; ++k) s += map.at(r, c + k);
      row_sums[static_cast<std::size_t>(r) * positions + c] = s;
    }
  }

  WindowHit best;
  double best_sum = 0.0;
  bool first = true;
  for (int r = 0; r < positions; ++r) {
    for (int c = 0; c < positions; ++c) {
      double s = 0.0;
      for (int k = 0; k < window; ++k) s += row_sums[static_cast<std::size_t>(r + k) * positions + c];
      if (first || s < best_sum) {
        first = false;
        best_sum = s;
        best.row = r;
        best.col = c;
      }
    }
  }
  best.side = window;
  best.center_x = best.col + window / 2.0;
  best.center_y = best.row + window / 2.0;
  best.mean_score = best_sum / (static_cast<double>(window) * window);
  return best;
}

Region propose_region(const ScoreMap& map, const GeometryConfig& cfg) {
  cfg.validate();
  if (map.size() != cfg.scoremap_size) {
    throw ShapeError("score map side " + std::to_string(map.size()) + " != configured scoremap_size " +
                     std::to_string(cfg.scoremap_size));
  }
  const int w = window_size(cfg);
  const WindowHit hit = find_min_window(map, w);
  // tau * (top-left + w / 2) as one quotient of integers, so centers that are
  // representable come out exact.
  const auto mapped = [&](int top_left) {
    const int64_t num = static_cast<int64_t>(cfg.image_size - cfg.region_size) * (2 * top_left + w);
    return static_cast<double>(num) / static_cast<double>(2 * (cfg.scoremap_size - w));
  };
  const PixelPoint center{mapped(hit.col), mapped(hit.row)};

  Region region;
  region.center_x = center.x;
  region.center_y = center.y;
  region.side = cfg.region_size;
  region.window_center_x = hit.center_x;
  region.window_center_y = hit.center_y;
  region.window_side = w;
  region.mean_score = hit.mean_score;

  const int max_origin = cfg.image_size - cfg.region_size;
  const auto origin = [&](double c) {
    const double raw = std::nearbyint(c - cfg.region_size / 2.0);
    return static_cast<int>(std::clamp(raw, 0.0, static_cast<double>(max_origin)));
  };
  region.x0 = origin(center.x);
  region.y0 = origin(center.y);
  return region;
}

}  // namespace drpan
