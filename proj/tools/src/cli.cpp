#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <opencv2/imgproc.hpp>
#include <json.hpp>

#include "drpan/checkpoint.hpp"
#include "drpan/config.hpp"
#include "drpan/data.hpp"
#include "drpan/error.hpp"
#include "drpan/image_io.hpp"
#include "drpan/trainer.hpp"

namespace drpan::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  bool deterministic = false;
  std::string out_dir;
  std::string checkpoint;
  std::string resume;
  std::string warm_start;
  std::string variant;
  std::string data;
  std::string input;
  bool paired = false;
};

// checkpoint snapshot (if any) -> --config -> --variant -> --set -> flags.
TrainConfig resolve(const Options& o, const std::optional<CheckpointPayload>& snapshot) {
  TrainConfig cfg = snapshot ? parse_config(snapshot->config_text) : TrainConfig{};
  if (!o.config.empty()) cfg = load_config(o.config, cfg);
  if (!o.variant.empty()) apply_variant(cfg, o.variant);
  for (const auto& s : o.sets) apply_override(cfg, s);
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.deterministic) cfg.run.deterministic = true;
  if (!o.out_dir.empty()) cfg.run.out_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

void write_effective_config(const TrainConfig& cfg) {
  const fs::path dir = cfg.run.out_dir;
  fs::create_directories(dir);
  std::ofstream out(dir / "effective.cfg", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "effective.cfg").string());
  out << to_text(cfg);
}

std::optional<CheckpointPayload> snapshot_of(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_checkpoint(path);
}

const std::string& required_checkpoint(const Options& o, const char* command) {
  if (o.checkpoint.empty()) throw UsageError(std::string(command) + " requires --checkpoint");
  return o.checkpoint;
}

// Trainer rebuilt from a checkpoint; only the generator and patch
// discriminator weights are needed by the inference commands.
Trainer inference_trainer(const Options& o, const char* command) {
  const auto payload = load_checkpoint(required_checkpoint(o, command));
  const TrainConfig cfg = resolve(o, payload);
  Trainer t(cfg);
  t.load_payload(payload, LoadMode::kWarmStart);
  write_effective_config(cfg);
  return t;
}

std::vector<fs::path> input_images(const std::string& input) {
  if (input.empty()) throw UsageError("--input is required");
  if (!fs::exists(input)) throw IoError("file not found: " + input);
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no images in " + input);
  } else {
    files.emplace_back(input);
  }
  return files;
}

torch::Tensor condition_tensor(const fs::path& file, int size, bool paired, int channels) {
  const cv::Mat image = read_image(file);
  if (paired) return split_pair(image, size, file.stem().string()).condition;
  cv::Mat resized;
  cv::resize(image, resized, cv::Size(size, size), 0, 0, cv::INTER_AREA);
  auto x = mat_to_tensor(resized);
  if (channels == 1) x = x.mean(0, true);
  return x;
}

int make_toy_data(const Options& o, std::ostream& out) {
  const TrainConfig cfg = resolve(o, std::nullopt);
  write_effective_config(cfg);
  const fs::path dir = cfg.run.out_dir;
  const auto train = make_toy_dataset(cfg.toy.spec, cfg.toy.count, dir / "train");
  const auto test = make_toy_dataset(cfg.toy.spec, cfg.toy.test_count, dir / "test");
  out << "wrote " << train.size() << " training and " << test.size() << " test pairs under " << dir.string()
      << '\n';
  return kExitOk;
}

int train(const Options& o, std::ostream& out) {
  if (!o.resume.empty() && !o.warm_start.empty()) throw UsageError("--resume and --warm-start are exclusive");
  const auto payload = snapshot_of(o.resume);
  const TrainConfig cfg = resolve(o, payload);
  const std::string data_dir = o.data.empty() ? cfg.data.train_dir : o.data;
  if (data_dir.empty()) throw ConfigError("no training data: set data.train_dir or pass --data");
  const auto data = load_paired_dir(data_dir, cfg.image_size);

  Trainer t(cfg);
  if (payload) t.load_payload(*payload, LoadMode::kResume);
  if (!o.warm_start.empty()) t.load(o.warm_start, LoadMode::kWarmStart);
  write_effective_config(cfg);

  const auto summaries = t.train(data);
  for (const auto& s : summaries) {
    out << "epoch " << s.epoch << " steps " << s.steps << " d_loss " << s.mean.d_loss << " r_loss " << s.mean.r_loss
        << " l1_full " << s.mean.l1_full << " scoremap_mean " << s.mean.scoremap_mean << '\n';
  }
  out << "checkpoint " << (fs::path(cfg.run.out_dir) / "checkpoints" / "latest.ckpt").string() << '\n';
  return kExitOk;
}

int eval(const Options& o, std::ostream& out) {
  Trainer t = inference_trainer(o, "eval");
  const auto& cfg = t.config();
  std::string dir = o.data;
  if (dir.empty()) dir = cfg.data.test_dir.empty() ? cfg.data.train_dir : cfg.data.test_dir;
  if (dir.empty()) throw ConfigError("no evaluation data: set data.test_dir or pass --data");
  const auto data = load_paired_dir(dir, cfg.image_size);
  const auto result = evaluate(t.state().generator, data, static_cast<std::size_t>(cfg.run.batch_size));
  const fs::path table = fs::path(cfg.run.out_dir) / "metrics.csv";
  write_metrics_csv(table, result);
  out << std::setprecision(6) << "psnr " << result.psnr.mean << " ssim " << result.ssim.mean << " over "
      << result.ids.size() << " samples -> " << table.string() << '\n';
  return kExitOk;
}

int infer_cmd(const Options& o, std::ostream& out) {
  Trainer t = inference_trainer(o, "infer");
  const auto& cfg = t.config();
  const auto files = input_images(o.input);
  for (const auto& f : files) {
    const auto x = condition_tensor(f, cfg.image_size, o.paired, cfg.model.channels).unsqueeze(0);
    const auto y = infer(t.state().generator, x);
    const fs::path dst = fs::path(cfg.run.out_dir) / (f.stem().string() + "_fake.png");
    write_png(dst, tensor_to_mat(y[0]));
    out << dst.string() << '\n';
  }
  return kExitOk;
}

int propose(const Options& o, std::ostream& out) {
  Trainer t = inference_trainer(o, "propose");
  const auto& cfg = t.config();
  const auto files = input_images(o.input);
  if (files.size() != 1) throw UsageError("propose takes a single --input image");
  const fs::path file = files.front();
  const auto x = split_pair(read_image(file), cfg.image_size, file.stem().string()).condition.unsqueeze(0);

  torch::NoGradGuard no_grad;
  auto& g = t.state().generator;
  auto& d = t.state().discriminator;
  g->eval();
  d->eval();
  const auto fake = g->forward(x);
  const auto geometry = cfg.geometry();
  const auto map = to_score_maps(d->forward(x, fake), geometry.image_size).front();
  const Region region = propose_region(map, geometry);

  const fs::path heatmap = fs::path(cfg.run.out_dir) / (file.stem().string() + "_scoremap.png");
  write_png(heatmap, scoremap_heatmap(map, geometry.image_size, region));
  // Center of the box actually used (after clamping into the image).
  const nlohmann::json j{{"cx", region.x0 + region.side / 2.0}, {"cy", region.y0 + region.side / 2.0},
                         {"side", region.side}, {"x0", region.x0}, {"y0", region.y0},
                         {"mean_score", region.mean_score}};
  out << j.dump() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discriminative region proposal adversarial training", "drpan"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Keys for --set: " + [] {
    std::string keys;
    for (const auto& k : config_keys()) keys += (keys.empty() ? "" : ", ") + k;
    return keys;
  }());

  Options o;
  app.add_option("--config", o.config, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "Override one key, e.g. --set weights.lambda=1 (repeatable)")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_option("--seed", o.seed, "Master seed (train.seed)");
  app.add_flag("--deterministic", o.deterministic, "Single-threaded deterministic kernels");
  app.add_option("--out-dir", o.out_dir, "Run directory for every output file");
  app.add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate, run or inspect");

  auto* toy = app.add_subcommand("make-toy-data", "Write the synthetic edge-to-filled-shape dataset");
  auto* train_cmd = app.add_subcommand("train", "Train generator, patch discriminator and reviser");
  train_cmd->add_option("--resume", o.resume, "Continue a run from its checkpoint");
  train_cmd->add_option("--warm-start", o.warm_start, "Initialize G and D from a checkpoint, fresh counters");
  train_cmd->add_option("--variant", o.variant, "Ablation preset")
      ->check(CLI::IsMember(variant_names()));
  train_cmd->add_option("--data", o.data, "Paired training directory (overrides data.train_dir)");
  auto* eval_cmd = app.add_subcommand("eval", "PSNR / SSIM of a checkpoint on a paired directory");
  eval_cmd->add_option("--data", o.data, "Paired evaluation directory (overrides data.test_dir)");
  auto* infer_sub = app.add_subcommand("infer", "Translate condition images with a checkpoint");
  infer_sub->add_option("--input", o.input, "Image file or directory")->required();
  infer_sub->add_flag("--paired", o.paired, "Inputs are side-by-side pairs; use the left half");
  auto* propose_sub = app.add_subcommand("propose", "Score map and discriminative region for one pair");
  propose_sub->add_option("--input", o.input, "Side-by-side pair image")->required();

  std::vector<std::string> argv_store{"drpan"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (toy->parsed()) return make_toy_data(o, out);
    if (train_cmd->parsed()) return train(o, out);
    if (eval_cmd->parsed()) return eval(o, out);
    if (infer_sub->parsed()) return infer_cmd(o, out);
    if (propose_sub->parsed()) return propose(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace drpan::cli
