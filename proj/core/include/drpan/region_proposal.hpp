#pragma once

#include <span>
#include <vector>

namespace drpan {

// Square image / score-map / region sizes used by the region proposal.
struct GeometryConfig {
  int image_size = 0;     // w_i, pixels
  int scoremap_size = 0;  // w_s, cells
  int region_size = 0;    // desired discriminative region side, pixels

  // Throws ConfigError unless image_size > region_size >= 1 and scoremap_size >= 2.
  void validate() const;
};

// Square grid of per-patch "real" probabilities emitted by the patch
// discriminator. Low values mark patches the discriminator considers fake.
class ScoreMap {
 public:
  // `values` is row-major, size*size entries, each strictly inside (0, 1).
  ScoreMap(int size, std::vector<double> values, int source_image_size = 0);

  int size() const { return size_; }
  int source_image_size() const { return source_image_size_; }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * size_ + col]; }
  std::span<const double> values() const { return values_; }
  double mean() const;

 private:
  int size_;
  int source_image_size_;
  std::vector<double> values_;
};

// A w x w window on the score map. Centers are in cell units and may be
// half-integers for even w: center = top-left + w / 2.
struct WindowHit {
  int row = 0;  // top-left cell
  int col = 0;
  int side = 0;
  double center_x = 0.0;
  double center_y = 0.0;
  double mean_score = 0.0;
};

// Axis-aligned square in image pixels. The box is the closed-open interval
// [x0, x0 + side) x [y0, y0 + side).
struct Region {
  double center_x = 0.0;
  double center_y = 0.0;
  int side = 0;
  int x0 = 0;
  int y0 = 0;
  double window_center_x = 0.0;
  double window_center_y = 0.0;
  int window_side = 0;
  double mean_score = 0.0;

  int x1() const { return x0 + side; }
  int y1() const { return y0 + side; }
  bool contains(int x, int y) const { return x >= x0 && x < x1() && y >= y0 && y < y1(); }

  // Region given directly by its box, without a score-map origin.
  static Region from_box(int x0, int y0, int side);
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

// Sliding-window side on the score map: round(w* . w_s / w_i) with
// round-half-to-even, clamped to [1, w_s - 1].
int window_size(const GeometryConfig& cfg);

// Pixels per score-map cell: (w_i - w*) / (w_s - w).
double scale_factor(const GeometryConfig& cfg, int window);

PixelPoint map_center(PixelPoint window_center, double scale);

// Window of side `window` (stride 1, fully inside the map) with the lowest
// mean score. Ties go to the smallest row, then the smallest column.
WindowHit find_min_window(const ScoreMap& map, int window);

// Full proposal: window size, darkest window, scale, center mapping, then a
// pixel box rounded to integers and clamped into the image.
Region propose_region(const ScoreMap& map, const GeometryConfig& cfg);

}  // namespace drpan
