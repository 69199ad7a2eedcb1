#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drpan/config.hpp"
#include "drpan/data.hpp"

namespace drpan::testkit {

// Small networks at 32x32 so a training step takes milliseconds.
inline TrainConfig tiny_config(const std::filesystem::path& out_dir, uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.image_size = 32;
  cfg.region_size = 8;
  cfg.model.g_width = 4;
  cfg.model.g_blocks = 1;
  cfg.model.d_width = 4;
  cfg.model.r_width = 4;
  cfg.run.seed = seed;
  cfg.run.deterministic = true;
  cfg.run.batch_size = 2;
  cfg.run.epochs = 1;
  cfg.run.checkpoint_every = 1;
  cfg.run.out_dir = out_dir.string();
  return cfg;
}

// In-memory toy pairs rendered at `size` pixels.
inline PairedDataset tiny_dataset(std::size_t n, int size = 32, uint64_t seed = 0) {
  ToyTaskSpec spec;
  spec.image_size = size;
  spec.seed = seed;
  std::vector<PairedSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back(split_pair(render_toy_pair(spec, i), size, "toy" + std::to_string(i)));
  }
  return PairedDataset(std::move(samples));
}

}  // namespace drpan::testkit
