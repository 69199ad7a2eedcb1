#include "drpan/trainer.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "drpan/error.hpp"
#include "drpan/fake_mask.hpp"
#include "drpan/image_io.hpp"

namespace drpan {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxSamples = 8;

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t step_seed(uint64_t seed, uint64_t step, uint64_t stream) {
  return splitmix(splitmix(seed ^ (stream * 0x632be59bd9b4e019ULL)) + step);
}

std::string number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double scalar(const torch::Tensor& t) { return t.defined() ? t.item<double>() : 0.0; }

void add_into(LossReport& acc, const LossReport& r) {
  acc.d_loss += r.d_loss;
  acc.r_loss += r.r_loss;
  acc.g_adv_patch += r.g_adv_patch;
  acc.g_adv_reviser += r.g_adv_reviser;
  acc.l1_full += r.l1_full;
  acc.l1_region += r.l1_region;
  acc.penalty += r.penalty;
  acc.total_g += r.total_g;
  acc.scoremap_mean += r.scoremap_mean;
}

LossReport divided(LossReport r, double n) {
  for (double* v : {&r.d_loss, &r.r_loss, &r.g_adv_patch, &r.g_adv_reviser, &r.l1_full, &r.l1_region, &r.penalty,
                    &r.total_g, &r.scoremap_mean}) {
    *v /= n;
  }
  return r;
}

std::vector<Region> propose_all(const torch::Tensor& scores, const GeometryConfig& geometry) {
  std::vector<Region> regions;
  for (const auto& map : to_score_maps(scores, geometry.image_size)) regions.push_back(propose_region(map, geometry));
  return regions;
}

}  // namespace

void enable_determinism() {
  at::set_num_threads(1);
  at::globalContext().setDeterministicAlgorithms(true, false);
}

std::string telemetry_row(uint64_t step, uint64_t epoch, const LossReport& r) {
  std::string row = std::to_string(step) + "," + std::to_string(epoch);
  for (double v : {r.d_loss, r.r_loss, r.g_adv_patch, r.g_adv_reviser, r.l1_full, r.l1_region, r.penalty, r.total_g,
                   r.scoremap_mean}) {
    row += "," + number(v);
  }
  return row;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(TrainConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.run.deterministic) enable_determinism();
  torch::manual_seed(config_.run.seed);
  state_.generator = Generator(config_.generator_spec());
  state_.discriminator = PatchDiscriminator(config_.discriminator_spec());
  state_.reviser = Reviser(config_.reviser_spec());

  const auto& o = config_.optim;
  state_.opt_g = std::make_unique<Adam>(state_.generator->parameters(), AdamOptions{o.lr_g, o.beta1, o.beta2});
  state_.opt_d = std::make_unique<Adam>(state_.discriminator->parameters(), AdamOptions{o.lr_d, o.beta1, o.beta2});
  state_.opt_r = std::make_unique<Adam>(state_.reviser->parameters(), AdamOptions{o.lr_r, o.beta1, o.beta2});
}

Trainer Trainer::from_checkpoint(const fs::path& path, const std::vector<std::string>& overrides) {
  const auto payload = load_checkpoint(path);
  auto cfg = parse_config(payload.config_text);
  for (const auto& o : overrides) apply_override(cfg, o);
  Trainer t(std::move(cfg));
  t.load_payload(payload, LoadMode::kResume);
  return t;
}

StepResult Trainer::train_step(const Batch& batch) {
  const auto& cfg = config_;
  const int n = cfg.image_size;
  if (batch.x.dim() != 4 || batch.x.size(2) != n || batch.x.size(3) != n || batch.x.sizes() != batch.y.sizes()) {
    throw ShapeError("batch does not match the configured " + std::to_string(n) + "x" + std::to_string(n) +
                     " resolution");
  }
  auto& G = state_.generator;
  auto& D = state_.discriminator;
  auto& R = state_.reviser;
  G->train();
  D->train();
  R->train();

  const auto& x = batch.x;
  const auto& y = batch.y;
  const double lambda = cfg.effective_lambda();
  const GeometryConfig geometry = cfg.geometry();
  StepResult result;
  LossReport& rep = result.report;

  // (1) generate
  const auto fake = generate(G, x, step_seed(cfg.run.seed, state_.step, 1));

  // (2) score the fake and propose one region per sample
  state_.opt_d->zero_grad();
  const auto scores_fake = D->forward(x, fake.detach());
  rep.scoremap_mean = scores_fake.detach().mean().item<double>();
  result.regions = propose_all(scores_fake.detach(), geometry);

  // (3) masked fake
  const MaskedPair masked = composite(y, fake, result.regions);
  const torch::Tensor y_mask = cfg.variant.use_fake_mask ? masked.masked_fake : fake;

  // (4) patch discriminator
  const auto scores_real = D->forward(x, y);
  const auto d_loss = patch_d_loss(scores_real, scores_fake);
  d_loss.backward();
  state_.opt_d->step();
  rep.d_loss = d_loss.item<double>();

  // (5) reviser
  if (lambda > 0.0) {
    state_.opt_r->zero_grad();
    const auto p_real = R->forward(x, y);
    const auto p_mask = R->forward(x, y_mask.detach());
    const auto perturbed =
        gradient_penalty_inputs(torch::cat({x, y}, 1), cfg.weights.delta_scale, step_seed(cfg.run.seed, state_.step, 2));
    const auto norms = input_gradient_norms(R, perturbed);
    const auto adversarial = reviser_adversarial_loss(p_real, p_mask);
    const auto penalty = gradient_penalty(norms, cfg.weights.alpha);
    const auto r_loss = adversarial + penalty;
    r_loss.backward();
    state_.opt_r->step();
    rep.r_loss = r_loss.item<double>();
    rep.penalty = penalty.item<double>();
  }

  // (6) generator
  state_.opt_g->zero_grad();
  torch::Tensor scores_fake_g;
  if (lambda < 1.0) {
    scores_fake_g = D->forward(x, fake);
  } else {
    torch::NoGradGuard no_grad;
    scores_fake_g = D->forward(x, fake.detach());
  }
  torch::Tensor p_mask_g;
  if (lambda > 0.0) p_mask_g = R->forward(x, y_mask);

  auto [l1_full, l1_region] = l1_terms(y, fake, masked.real_crop, masked.fake_crop, cfg.weights);
  if (!cfg.variant.use_region_l1) l1_region = torch::zeros({}, fake.options());
  ObjectiveWeights weights = cfg.weights;
  weights.lambda = lambda;
  const auto total = generator_loss(scores_fake_g, p_mask_g, l1_full, l1_region, weights, cfg.generator_form);
  total.backward();
  state_.opt_g->step();

  rep.g_adv_patch = generator_adversarial(scores_fake_g.detach(), cfg.generator_form).item<double>();
  rep.g_adv_reviser = p_mask_g.defined() ? generator_adversarial(p_mask_g.detach(), cfg.generator_form).item<double>() : 0.0;
  rep.l1_full = scalar(l1_full);
  rep.l1_region = scalar(l1_region);
  rep.total_g = total.item<double>();

  // Gradients the generator pass left on the critics are stale from here on.
  state_.opt_d->zero_grad();
  state_.opt_r->zero_grad();
  ++state_.step;

  if (!rep.all_finite()) {
    throw NumericError("non-finite loss at step " + std::to_string(state_.step) + ": " +
                       telemetry_row(state_.step, state_.epoch + 1, rep));
  }
  return result;
}

std::vector<EpochSummary> Trainer::train(const PairedDataset& data, bool write_files, const StepObserver& observer) {
  if (data.empty()) throw ConfigError("training dataset is empty");
  if (data.resolution() != config_.image_size || data.channels() != config_.model.channels) {
    throw ShapeError("dataset is " + std::to_string(data.resolution()) + "px/" + std::to_string(data.channels()) +
                     "ch but the configuration expects " + std::to_string(config_.image_size) + "px/" +
                     std::to_string(config_.model.channels) + "ch");
  }
  const auto& run = config_.run;
  const fs::path out_dir = run.out_dir;
  std::ofstream telemetry;
  if (write_files) {
    fs::create_directories(out_dir);
    const fs::path csv = out_dir / "telemetry.csv";
    const bool fresh = state_.step == 0 || !fs::exists(csv);
    telemetry.open(csv, fresh ? std::ios::trunc : std::ios::app);
    if (!telemetry) throw IoError("cannot write " + csv.string());
    if (fresh) telemetry << kTelemetryHeader << '\n';
  }

  const std::size_t batches_per_epoch = (data.size() + run.batch_size - 1) / run.batch_size;
  std::vector<EpochSummary> summaries;
  while (state_.epoch < static_cast<uint64_t>(run.epochs)) {
    const uint64_t epoch = state_.epoch;  // 0-based epoch being trained
    const auto batches = epoch_batches(data.size(), static_cast<std::size_t>(run.batch_size), run.seed, epoch);
    const uint64_t done = state_.step - epoch * batches_per_epoch;  // non-zero after a mid-epoch resume

    EpochSummary summary;
    summary.epoch = epoch + 1;
    LossReport acc;
    for (std::size_t b = done; b < batches.size(); ++b) {
      std::vector<bool> flips;
      if (run.flip) {
        std::mt19937_64 rng(step_seed(run.seed, state_.step, 3));
        for (std::size_t k = 0; k < batches[b].size(); ++k) flips.push_back((rng() & 1U) != 0);
      }
      const auto batch = data.batch(batches[b], flips);

      StepResult result;
      try {
        result = train_step(batch);
      } catch (const NumericError& e) {
        if (write_files) {
          std::ofstream diag(out_dir / "diagnostics.txt", std::ios::app);
          diag << e.what() << '\n';
        }
        throw;
      }
      if (write_files) {
        telemetry << telemetry_row(state_.step, epoch + 1, result.report) << '\n';
        telemetry.flush();
      }
      add_into(acc, result.report);
      ++summary.steps;
      if (observer) observer(state_.step, epoch + 1, result);
    }
    if (summary.steps > 0) summary.mean = divided(acc, static_cast<double>(summary.steps));
    state_.scoremap_history.push_back(summary.mean.scoremap_mean);
    state_.epoch = epoch + 1;
    summaries.push_back(summary);

    if (write_files) {
      if (run.sample_every > 0 && state_.epoch % static_cast<uint64_t>(run.sample_every) == 0) {
        export_samples(data, state_.epoch);
      }
      const bool last = state_.epoch == static_cast<uint64_t>(run.epochs);
      if (run.checkpoint_every > 0 && state_.epoch % static_cast<uint64_t>(run.checkpoint_every) == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03llu.ckpt", static_cast<unsigned long long>(state_.epoch));
        save(out_dir / "checkpoints" / name);
      }
      if (last || run.checkpoint_every > 0) save(out_dir / "checkpoints" / "latest.ckpt");
    }
  }
  return summaries;
}

void Trainer::export_samples(const PairedDataset& data, uint64_t epoch) const {
  torch::NoGradGuard no_grad;
  auto G = state_.generator;
  auto D = state_.discriminator;
  const bool g_training = G->is_training();
  const bool d_training = D->is_training();
  G->eval();
  D->eval();

  const std::size_t count = std::min(kMaxSamples, data.size());
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto batch = data.batch(idx);
  const auto fake = G->forward(batch.x);
  const auto scores = D->forward(batch.x, fake);
  const auto geometry = config_.geometry();
  const auto maps = to_score_maps(scores, geometry.image_size);
  std::vector<Region> regions;
  for (const auto& m : maps) regions.push_back(propose_region(m, geometry));
  const auto masked = composite(batch.y, fake, regions);

  std::vector<std::vector<torch::Tensor>> rows;
  std::vector<cv::Mat> heatmaps;
  for (std::size_t i = 0; i < count; ++i) {
    const auto k = static_cast<int64_t>(i);
    rows.push_back({batch.x[k], fake[k], masked.masked_fake[k], batch.y[k]});
    heatmaps.push_back(scoremap_heatmap(maps[i], geometry.image_size, regions[i]));
  }
  char name[32];
  std::snprintf(name, sizeof(name), "epoch_%03llu", static_cast<unsigned long long>(epoch));
  const fs::path dir = fs::path(config_.run.out_dir) / "samples";
  write_png(dir / (std::string(name) + "_grid.png"), tile_grid(rows));
  cv::Mat strip;
  cv::hconcat(heatmaps, strip);
  write_png(dir / (std::string(name) + "_scoremap.png"), strip);

  G->train(g_training);
  D->train(d_training);
}

CheckpointPayload Trainer::to_payload() const {
  CheckpointPayload p;
  p.config_text = to_text(config_);
  p.step = state_.step;
  p.epoch = state_.epoch;
  p.scoremap_history = state_.scoremap_history;
  p.spec_hashes = {{"generator", architecture_hash(*state_.generator)},
                   {"discriminator", architecture_hash(*state_.discriminator)},
                   {"reviser", architecture_hash(*state_.reviser)}};
  p.groups = {{"generator", module_tensors(*state_.generator)},
              {"discriminator", module_tensors(*state_.discriminator)},
              {"reviser", module_tensors(*state_.reviser)},
              {"adam.generator", state_.opt_g->state()},
              {"adam.discriminator", state_.opt_d->state()},
              {"adam.reviser", state_.opt_r->state()}};
  return p;
}

void Trainer::load_payload(const CheckpointPayload& p, LoadMode mode) {
  const auto check_hash = [&](const std::string& name, const nn::Module& m) {
    for (const auto& [n, h] : p.spec_hashes) {
      if (n == name && h != architecture_hash(m)) throw ConfigError("checkpoint " + name + " architecture differs");
    }
  };
  check_hash("generator", *state_.generator);
  check_hash("discriminator", *state_.discriminator);
  load_module_tensors(*state_.generator, p.group("generator").tensors);
  load_module_tensors(*state_.discriminator, p.group("discriminator").tensors);
  if (mode == LoadMode::kWarmStart) return;

  check_hash("reviser", *state_.reviser);
  load_module_tensors(*state_.reviser, p.group("reviser").tensors);
  state_.opt_g->load_state(p.group("adam.generator").tensors);
  state_.opt_d->load_state(p.group("adam.discriminator").tensors);
  state_.opt_r->load_state(p.group("adam.reviser").tensors);
  state_.step = p.step;
  state_.epoch = p.epoch;
  state_.scoremap_history = p.scoremap_history;
}

void Trainer::save(const fs::path& path) const { save_checkpoint(path, to_payload()); }

void Trainer::load(const fs::path& path, LoadMode mode) { load_payload(load_checkpoint(path), mode); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

torch::Tensor infer(Generator& generator, const torch::Tensor& x) {
  torch::NoGradGuard no_grad;
  const bool training = generator->is_training();
  generator->eval();
  auto out = generator->forward(x);
  generator->train(training);
  return out;
}

metrics::Image to_metric_image(const torch::Tensor& chw) {
  const auto t = chw.detach().to(torch::kCPU, torch::kDouble).add(1.0).mul(127.5).contiguous();
  const double* p = t.data_ptr<double>();
  return metrics::Image(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)),
                        std::vector<double>(p, p + t.numel()));
}

Evaluation evaluate(Generator& generator, const PairedDataset& data, std::size_t batch_size) {
  if (data.empty()) throw ConfigError("evaluation dataset is empty");
  if (data.channels() != generator->spec().in_channels) throw ShapeError("dataset channels do not match the model");
  Evaluation eval;
  std::vector<double> psnrs;
  std::vector<double> ssims;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(data.size(), begin + batch_size); ++i) idx.push_back(i);
    const auto batch = data.batch(idx);
    const auto fake = infer(generator, batch.x);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto a = to_metric_image(fake[static_cast<int64_t>(k)]);
      const auto b = to_metric_image(batch.y[static_cast<int64_t>(k)]);
      psnrs.push_back(metrics::psnr(a, b, 255.0));
      ssims.push_back(metrics::ssim(a, b, 255.0));
      eval.ids.push_back(batch.ids[k]);
    }
  }
  eval.psnr = metrics::summarize("psnr", std::move(psnrs));
  eval.ssim = metrics::summarize("ssim", std::move(ssims));
  return eval;
}

void write_metrics_csv(const fs::path& path, const Evaluation& eval) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,psnr,ssim\n";
  for (std::size_t i = 0; i < eval.ids.size(); ++i) {
    out << eval.ids[i] << ',' << number(eval.psnr.per_sample[i]) << ',' << number(eval.ssim.per_sample[i]) << '\n';
  }
  out << "mean," << number(eval.psnr.mean) << ',' << number(eval.ssim.mean) << '\n';
}

double mean_l1(Generator& generator, const PairedDataset& data, std::size_t batch_size) {
  if (data.empty()) throw ConfigError("dataset is empty");
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(data.size(), begin + batch_size); ++i) idx.push_back(i);
    const auto batch = data.batch(idx);
    total += (infer(generator, batch.x) - batch.y).abs().mean().item<double>() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.size());
}

}  // namespace drpan
