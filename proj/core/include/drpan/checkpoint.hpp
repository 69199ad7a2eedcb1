#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace drpan {

inline constexpr char kCheckpointMagic[8] = {'D', 'R', 'P', 'A', 'N', 'C', 'K', 'P'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  torch::Tensor value;
};

struct TensorGroup {
  std::string name;
  std::vector<NamedTensor> tensors;
};

// Everything a checkpoint file holds. Layout (little-endian):
//   magic[8] version:u32
//   config:str step:u64 epoch:u64
//   history: u64 count, f64[count]
//   spec hashes: u64 count, (name:str, hash:u64)[count]
//   groups: u64 count, (name:str, u64 n, (name:str, dtype:u8, rank:u32, dims:i64[rank], bytes)[n])[count]
//   checksum:u64 (FNV-1a of everything before it)
// with str = u64 length + bytes. Tensors are written as contiguous CPU data.
struct CheckpointPayload {
  std::string config_text;
  uint64_t step = 0;
  uint64_t epoch = 0;
  std::vector<double> scoremap_history;
  std::vector<std::pair<std::string, uint64_t>> spec_hashes;
  std::vector<TensorGroup> groups;

  const TensorGroup& group(std::string_view name) const;
  bool has_group(std::string_view name) const;
};

std::string encode_checkpoint(const CheckpointPayload& payload);
CheckpointPayload decode_checkpoint(std::string_view bytes);

// Writes through a temporary file and renames, so a crash never leaves a
// truncated checkpoint behind.
void save_checkpoint(const std::filesystem::path& path, const CheckpointPayload& payload);
CheckpointPayload load_checkpoint(const std::filesystem::path& path);

uint64_t fnv1a(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);

// Parameters and buffers of a module as "param.<name>" / "buffer.<name>".
std::vector<NamedTensor> module_tensors(const torch::nn::Module& module);
void load_module_tensors(torch::nn::Module& module, const std::vector<NamedTensor>& tensors);

// Hash of a module's tensor names, shapes and dtypes.
uint64_t architecture_hash(const torch::nn::Module& module);

}  // namespace drpan
