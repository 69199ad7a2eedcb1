#include "drpan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "drpan/error.hpp"

namespace drpan {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  const auto fail = [&]() -> T {
    throw ConfigError("bad value '" + std::string(text) + "' for key " + std::string(key));
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    return fail();
  } else if constexpr (std::is_same_v<T, std::string>) {
    return std::string(text);
  } else if constexpr (std::is_same_v<T, GeneratorForm>) {
    if (text == "nonsaturating") return GeneratorForm::kNonSaturating;
    if (text == "literal") return GeneratorForm::kLiteral;
    return fail();
  } else {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return fail();
    return value;
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, GeneratorForm>) {
    return v == GeneratorForm::kLiteral ? "literal" : "nonsaturating";
  } else {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
  }
}

struct Field {
  std::string key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename Access>
Field field(std::string key, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<TrainConfig&>()))>;
  Field f;
  f.key = key;
  f.set = [key, access](TrainConfig& c, std::string_view v) { access(c) = parse_value<T>(key, v); };
  f.get = [access](const TrainConfig& c) { return format_value(access(const_cast<TrainConfig&>(c))); };
  return f;
}

#define DRPAN_FIELD(key, member) field(key, [](TrainConfig& c) -> auto& { return c.member; })

const std::vector<Field>& schema() {
  static const std::vector<Field> fields{
      DRPAN_FIELD("geometry.image_size", image_size),
      DRPAN_FIELD("geometry.region_size", region_size),
      DRPAN_FIELD("weights.alpha", weights.alpha),
      DRPAN_FIELD("weights.beta", weights.beta),
      DRPAN_FIELD("weights.gamma", weights.gamma),
      DRPAN_FIELD("weights.lambda", weights.lambda),
      DRPAN_FIELD("weights.delta_scale", weights.delta_scale),
      DRPAN_FIELD("weights.generator_form", generator_form),
      DRPAN_FIELD("model.channels", model.channels),
      DRPAN_FIELD("model.g_width", model.g_width),
      DRPAN_FIELD("model.g_blocks", model.g_blocks),
      DRPAN_FIELD("model.g_dropout", model.g_dropout),
      DRPAN_FIELD("model.d_width", model.d_width),
      DRPAN_FIELD("model.d_padding", model.d_padding),
      DRPAN_FIELD("model.r_width", model.r_width),
      DRPAN_FIELD("optim.lr_g", optim.lr_g),
      DRPAN_FIELD("optim.lr_d", optim.lr_d),
      DRPAN_FIELD("optim.lr_r", optim.lr_r),
      DRPAN_FIELD("optim.beta1", optim.beta1),
      DRPAN_FIELD("optim.beta2", optim.beta2),
      DRPAN_FIELD("variant.use_fake_mask", variant.use_fake_mask),
      DRPAN_FIELD("variant.use_reviser", variant.use_reviser),
      DRPAN_FIELD("variant.use_region_l1", variant.use_region_l1),
      DRPAN_FIELD("train.seed", run.seed),
      DRPAN_FIELD("train.deterministic", run.deterministic),
      DRPAN_FIELD("train.batch_size", run.batch_size),
      DRPAN_FIELD("train.epochs", run.epochs),
      DRPAN_FIELD("train.checkpoint_every", run.checkpoint_every),
      DRPAN_FIELD("train.sample_every", run.sample_every),
      DRPAN_FIELD("train.flip", run.flip),
      DRPAN_FIELD("train.out_dir", run.out_dir),
      DRPAN_FIELD("data.train_dir", data.train_dir),
      DRPAN_FIELD("data.test_dir", data.test_dir),
      DRPAN_FIELD("toy.image_size", toy.spec.image_size),
      DRPAN_FIELD("toy.min_shapes", toy.spec.min_shapes),
      DRPAN_FIELD("toy.max_shapes", toy.spec.max_shapes),
      DRPAN_FIELD("toy.seed", toy.spec.seed),
      DRPAN_FIELD("toy.count", toy.count),
      DRPAN_FIELD("toy.test_count", toy.test_count),
  };
  return fields;
}

#undef DRPAN_FIELD

const Field& lookup(std::string_view key) {
  for (const auto& f : schema()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key: " + std::string(key));
}

}  // namespace

GeneratorSpec TrainConfig::generator_spec() const {
  GeneratorSpec s;
  s.in_channels = model.channels;
  s.out_channels = model.channels;
  s.base_width = model.g_width;
  s.n_residual_blocks = model.g_blocks;
  s.dropout = model.g_dropout;
  return s;
}

PatchDiscriminatorSpec TrainConfig::discriminator_spec() const {
  PatchDiscriminatorSpec s;
  s.in_channels = 2 * model.channels;
  s.base_width = model.d_width;
  s.padding = model.d_padding;
  return s;
}

ReviserSpec TrainConfig::reviser_spec() const {
  ReviserSpec s;
  s.in_channels = 2 * model.channels;
  s.base_width = model.r_width;
  s.image_size = image_size;
  return s;
}

GeometryConfig TrainConfig::geometry() const {
  return {image_size, scoremap_size(image_size, discriminator_spec()), region_size};
}

double TrainConfig::effective_lambda() const { return variant.use_reviser ? weights.lambda : 0.0; }

void TrainConfig::validate() const {
  if (model.channels != 1 && model.channels != 3) throw ConfigError("model.channels must be 1 or 3");
  if (image_size % 4 != 0) throw ConfigError("geometry.image_size must be divisible by 4");
  if (image_size < 8) throw ConfigError("geometry.image_size must be >= 8");
  geometry().validate();
  weights.validate();
  if (model.g_width < 1 || model.d_width < 1 || model.r_width < 1 || model.g_blocks < 0) {
    throw ConfigError("model widths must be positive");
  }
  if (model.g_dropout < 0.0 || model.g_dropout >= 1.0) throw ConfigError("model.g_dropout must lie in [0, 1)");
  if (model.d_padding < 0 || model.d_padding > 1) throw ConfigError("model.d_padding must be 0 or 1");
  if (optim.lr_g <= 0 || optim.lr_d <= 0 || optim.lr_r <= 0) throw ConfigError("learning rates must be positive");
  if (optim.beta1 < 0 || optim.beta1 >= 1 || optim.beta2 < 0 || optim.beta2 >= 1) {
    throw ConfigError("optimizer moments must lie in [0, 1)");
  }
  if (run.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (run.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (run.checkpoint_every < 0 || run.sample_every < 0) throw ConfigError("periods must be >= 0");
}

void apply_variant(TrainConfig& cfg, std::string_view name) {
  auto& v = cfg.variant;
  if (name == "patchgan") {
    v = {false, false, false};
  } else if (name == "region_l1") {
    v = {false, false, true};
  } else if (name == "reviser") {
    v = {false, true, true};
  } else if (name == "drpan") {
    v = {true, true, true};
  } else {
    throw ConfigError("unknown variant: " + std::string(name));
  }
}

std::vector<std::string> variant_names() { return {"patchgan", "region_l1", "reviser", "drpan"}; }

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    lookup(key).set(base, trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_override(TrainConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must look like key=value: " + std::string(assignment));
  lookup(trim(assignment.substr(0, eq))).set(cfg, trim(assignment.substr(eq + 1)));
}

std::string to_text(const TrainConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : schema()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : schema()) keys.push_back(f.key);
  return keys;
}

}  // namespace drpan
