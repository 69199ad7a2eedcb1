#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "drpan/data.hpp"
#include "drpan/models.hpp"
#include "drpan/objectives.hpp"
#include "drpan/region_proposal.hpp"

namespace drpan {

struct ModelConfig {
  int channels = 3;
  int g_width = 64;
  int g_blocks = 9;
  double g_dropout = 0.5;
  int d_width = 64;
  int d_padding = 1;
  int r_width = 64;
};

struct OptimConfig {
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double lr_r = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
};

// Ablation switches. use_reviser = false is the PatchGAN (+L1) baseline;
// use_fake_mask = false shows the reviser the whole generated image.
struct VariantConfig {
  bool use_fake_mask = true;
  bool use_reviser = true;
  bool use_region_l1 = true;
};

struct RunConfig {
  uint64_t seed = 0;
  bool deterministic = false;
  int batch_size = 8;
  int epochs = 20;
  int checkpoint_every = 5;  // epochs; 0 keeps only the final checkpoint
  int sample_every = 1;      // epochs; 0 disables sample grids
  bool flip = false;
  std::string out_dir = "runs/default";
};

struct DataConfig {
  std::string train_dir;
  std::string test_dir;
};

struct ToyConfig {
  ToyTaskSpec spec;
  int count = 500;
  int test_count = 100;
};

struct TrainConfig {
  int image_size = 64;
  int region_size = 32;
  ObjectiveWeights weights;
  GeneratorForm generator_form = GeneratorForm::kNonSaturating;
  ModelConfig model;
  OptimConfig optim;
  VariantConfig variant;
  RunConfig run;
  DataConfig data;
  ToyConfig toy;

  GeneratorSpec generator_spec() const;
  PatchDiscriminatorSpec discriminator_spec() const;
  ReviserSpec reviser_spec() const;
  // Region-proposal geometry; the score-map side follows from the
  // discriminator's layer arithmetic at image_size.
  GeometryConfig geometry() const;
  // Reviser share of the adversarial generator loss after variant switches.
  double effective_lambda() const;

  void validate() const;
};

// Named ablation presets: "patchgan", "region_l1", "reviser", "drpan".
void apply_variant(TrainConfig& cfg, std::string_view name);
std::vector<std::string> variant_names();

// Flat key-value text. Lines are `section.key = value` or `key = value` under
// a `[section]` header; `#` starts a comment. Unknown keys and malformed
// values throw ConfigError.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

// Applies one `section.key=value` override.
void apply_override(TrainConfig& cfg, std::string_view assignment);

// Canonical text form; parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const TrainConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace drpan
