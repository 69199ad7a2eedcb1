#include "drpan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "drpan/error.hpp"

namespace drpan {

namespace {

uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat: return 0;
    case torch::kDouble: return 1;
    case torch::kLong: return 2;
    case torch::kInt: return 3;
    case torch::kUInt8: return 4;
    default: throw IoError(std::string("checkpoint: unsupported dtype ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from_code(uint8_t code) {
  switch (code) {
    case 0: return torch::kFloat;
    case 1: return torch::kDouble;
    case 2: return torch::kLong;
    case 3: return torch::kInt;
    case 4: return torch::kUInt8;
    default: throw IoError("checkpoint: unknown dtype code " + std::to_string(code));
  }
}

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(std::string_view s) {
    pod<uint64_t>(s.size());
    out_.append(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void tensor(const torch::Tensor& t) {
    const auto c = t.detach().to(torch::kCPU).contiguous();
    pod<uint8_t>(dtype_code(c.scalar_type()));
    pod<uint32_t>(static_cast<uint32_t>(c.dim()));
    for (auto d : c.sizes()) pod<int64_t>(d);
    raw(c.data_ptr(), static_cast<std::size_t>(c.nbytes()));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<uint64_t>();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  torch::Tensor tensor() {
    const auto dtype = dtype_from_code(pod<uint8_t>());
    const auto rank = pod<uint32_t>();
    if (rank > 8) throw IoError("checkpoint: implausible tensor rank");
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) {
      d = pod<int64_t>();
      if (d < 0) throw IoError("checkpoint: negative tensor dimension");
    }
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    const auto n = static_cast<std::size_t>(t.nbytes());
    need(n);
    std::memcpy(t.data_ptr(), in_.data() + pos_, n);
    pos_ += n;
    return t;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw IoError("checkpoint: truncated payload");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

const TensorGroup& CheckpointPayload::group(std::string_view name) const {
  for (const auto& g : groups) {
    if (g.name == name) return g;
  }
  throw IoError("checkpoint: missing group " + std::string(name));
}

bool CheckpointPayload::has_group(std::string_view name) const {
  for (const auto& g : groups) {
    if (g.name == name) return true;
  }
  return false;
}

uint64_t fnv1a(std::string_view bytes, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_checkpoint(const CheckpointPayload& p) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.pod<uint32_t>(kCheckpointVersion);
  w.str(p.config_text);
  w.pod<uint64_t>(p.step);
  w.pod<uint64_t>(p.epoch);
  w.pod<uint64_t>(p.scoremap_history.size());
  for (double v : p.scoremap_history) w.pod<double>(v);
  w.pod<uint64_t>(p.spec_hashes.size());
  for (const auto& [name, hash] : p.spec_hashes) {
    w.str(name);
    w.pod<uint64_t>(hash);
  }
  w.pod<uint64_t>(p.groups.size());
  for (const auto& g : p.groups) {
    w.str(g.name);
    w.pod<uint64_t>(g.tensors.size());
    for (const auto& t : g.tensors) {
      w.str(t.name);
      w.tensor(t.value);
    }
  }
  const uint64_t checksum = fnv1a(w.bytes());
  w.pod<uint64_t>(checksum);
  return std::move(w.bytes());
}

CheckpointPayload decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) + sizeof(uint32_t) + sizeof(uint64_t) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError("not a checkpoint file");
  }
  const auto body = bytes.substr(0, bytes.size() - sizeof(uint64_t));
  uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  if (stored != fnv1a(body)) throw IoError("checkpoint checksum mismatch");

  Reader r(body.substr(sizeof(kCheckpointMagic)));
  const auto version = r.pod<uint32_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  CheckpointPayload p;
  p.config_text = r.str();
  p.step = r.pod<uint64_t>();
  p.epoch = r.pod<uint64_t>();
  p.scoremap_history.resize(r.pod<uint64_t>());
  for (auto& v : p.scoremap_history) v = r.pod<double>();
  p.spec_hashes.resize(r.pod<uint64_t>());
  for (auto& [name, hash] : p.spec_hashes) {
    name = r.str();
    hash = r.pod<uint64_t>();
  }
  p.groups.resize(r.pod<uint64_t>());
  for (auto& g : p.groups) {
    g.name = r.str();
    g.tensors.resize(r.pod<uint64_t>());
    for (auto& t : g.tensors) {
      t.name = r.str();
      t.value = r.tensor();
    }
  }
  if (r.pos() + sizeof(kCheckpointMagic) != body.size()) throw IoError("checkpoint: trailing bytes");
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointPayload& payload) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_checkpoint(payload);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointPayload load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

std::vector<NamedTensor> module_tensors(const torch::nn::Module& module) {
  std::vector<NamedTensor> out;
  for (const auto& item : module.named_parameters()) out.push_back({"param." + item.key(), item.value()});
  for (const auto& item : module.named_buffers()) out.push_back({"buffer." + item.key(), item.value()});
  return out;
}

void load_module_tensors(torch::nn::Module& module, const std::vector<NamedTensor>& tensors) {
  const auto find = [&](const std::string& name) -> const torch::Tensor& {
    for (const auto& t : tensors) {
      if (t.name == name) return t.value;
    }
    throw IoError("checkpoint: missing tensor " + name);
  };
  torch::NoGradGuard no_grad;
  const auto copy = [&](torch::Tensor& dst, const std::string& name) {
    const auto& src = find(name);
    if (src.sizes() != dst.sizes() || src.scalar_type() != dst.scalar_type()) {
      throw ShapeError("checkpoint: tensor " + name + " does not match the network");
    }
    dst.copy_(src);
  };
  for (auto& item : module.named_parameters()) copy(item.value(), "param." + item.key());
  for (auto& item : module.named_buffers()) copy(item.value(), "buffer." + item.key());
  if (tensors.size() != module.named_parameters().size() + module.named_buffers().size()) {
    throw IoError("checkpoint: tensor count does not match the network");
  }
}

uint64_t architecture_hash(const torch::nn::Module& module) {
  std::string desc;
  for (const auto& t : module_tensors(module)) {
    desc += t.name;
    desc += ':';
    desc += c10::toString(t.value.scalar_type());
    for (auto d : t.value.sizes()) desc += "," + std::to_string(d);
    desc += ';';
  }
  return fnv1a(desc);
}

}  // namespace drpan
