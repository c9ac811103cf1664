#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "mvkt/gat.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt {

// Binary layout, little-endian:
//   "MVKT" | u32 version | u64 config hash | u32 tag length | tag bytes |
//   u32 blob count | blobs...
// blob: u32 name length | name | u32 rank | u64 dims[rank] | f64 values[]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::string tag;  // e.g. "pretrained", "random", "finetuned"
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

using ParamWalk = std::function<void(const ParamVisitor&)>;

// Snapshot of every parameter reached by `walk`.
Checkpoint make_checkpoint(const ParamWalk& walk, std::uint64_t config_hash, std::string tag);

// Copies named tensors into the parameters reached by `walk`; every parameter
// must be present with a matching shape.
void restore_checkpoint(const ParamWalk& walk, const Checkpoint& ckpt);

}  // namespace mvkt
