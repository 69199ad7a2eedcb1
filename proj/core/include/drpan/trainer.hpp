#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "drpan/adam.hpp"
#include "drpan/checkpoint.hpp"
#include "drpan/config.hpp"
#include "drpan/data.hpp"
#include "drpan/metrics.hpp"
#include "drpan/models.hpp"
#include "drpan/objectives.hpp"

namespace drpan {

inline constexpr const char* kTelemetryHeader =
    "step,epoch,d_loss,r_loss,g_adv_patch,g_adv_reviser,l1_full,l1_region,penalty,total_g,scoremap_mean";

// Networks, optimizer state and progress counters.
struct TrainState {
  Generator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};
  Reviser reviser{nullptr};
  std::unique_ptr<Adam> opt_g;
  std::unique_ptr<Adam> opt_d;
  std::unique_ptr<Adam> opt_r;
  uint64_t step = 0;   // optimizer steps taken
  uint64_t epoch = 0;  // completed epochs
  std::vector<double> scoremap_history;  // epoch means of scoremap_mean
};

struct StepResult {
  LossReport report;
  std::vector<Region> regions;
};

struct EpochSummary {
  uint64_t epoch = 0;  // 1-based
  std::size_t steps = 0;
  LossReport mean;
};

// Optional per-step callback (telemetry row already written when it runs).
using StepObserver = std::function<void(uint64_t step, uint64_t epoch, const StepResult&)>;

enum class LoadMode {
  kResume,     // networks, optimizers and counters
  kWarmStart,  // generator and patch discriminator weights only; fresh counters
};

// Generate / propose / revise loop over one configuration.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  // Rebuilds a trainer from a checkpoint's embedded configuration. `overrides`
  // (key=value) are applied on top of the snapshot before construction.
  static Trainer from_checkpoint(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

  const TrainConfig& config() const { return config_; }
  TrainState& state() { return state_; }
  const TrainState& state() const { return state_; }

  // One step on a batch: generate, propose regions, composite, update D_p,
  // update R (when active), update G.
  StepResult train_step(const Batch& batch);

  // Runs epochs until config.run.epochs are complete, writing telemetry.csv,
  // sample grids and checkpoints under config.run.out_dir when `write_files`.
  std::vector<EpochSummary> train(const PairedDataset& data, bool write_files = true,
                                  const StepObserver& observer = {});

  CheckpointPayload to_payload() const;
  void load_payload(const CheckpointPayload& payload, LoadMode mode = LoadMode::kResume);
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path, LoadMode mode = LoadMode::kResume);

 private:
  void export_samples(const PairedDataset& data, uint64_t epoch) const;

  TrainConfig config_;
  TrainState state_;
};

// Per-sample PSNR / SSIM of G(x) against y, on the 0..255 scale.
struct Evaluation {
  std::vector<std::string> ids;
  metrics::MetricResult psnr;
  metrics::MetricResult ssim;
};

// Inference-mode generator output (running batch-norm statistics, no dropout).
torch::Tensor infer(Generator& generator, const torch::Tensor& x);

Evaluation evaluate(Generator& generator, const PairedDataset& data, std::size_t batch_size = 8);

// Header `id,psnr,ssim`, one row per sample, then a `mean` row.
void write_metrics_csv(const std::filesystem::path& path, const Evaluation& eval);

// Mean |y - G(x)| over a dataset with the generator in inference mode.
double mean_l1(Generator& generator, const PairedDataset& data, std::size_t batch_size = 8);

// [-1, 1] C x H x W tensor -> 0..255 metric image.
metrics::Image to_metric_image(const torch::Tensor& chw);

std::string telemetry_row(uint64_t step, uint64_t epoch, const LossReport& r);

// Single-threaded, deterministic kernels.
void enable_determinism();

}  // namespace drpan
