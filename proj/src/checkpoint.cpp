#include "mvkt/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace mvkt {

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) {
    throw DataError(DataErrorKind::kInvalid, path.string() + ": truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string get_string(std::ifstream& in, const std::filesystem::path& path) {
  const auto len = get<std::uint32_t>(in, path);
  if (len > (1u << 20)) throw DataError(DataErrorKind::kInvalid, path.string() + ": bad string length");
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) {
    throw DataError(DataErrorKind::kInvalid, path.string() + ": truncated checkpoint");
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::kMissingFile, "cannot write " + path.string());
  out.write("MVKT", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ckpt.config_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tag.size()));
  out.write(ckpt.tag.data(), static_cast<std::streamsize>(ckpt.tag.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.values()) put<double>(out, v);
  }
}

Checkpoint make_checkpoint(const ParamWalk& walk, std::uint64_t config_hash, std::string tag) {
  Checkpoint c{config_hash, std::move(tag), {}};
  walk([&](const std::string& name, Tensor& t) { c.tensors[name] = t; });
  return c;
}

void restore_checkpoint(const ParamWalk& walk, const Checkpoint& ckpt) {
  walk([&](const std::string& name, Tensor& t) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw DimensionError("checkpoint: missing tensor '" + name + "'");
    if (!it->second.same_shape(t)) {
      throw DimensionError("checkpoint: tensor '" + name + "' has shape " +
                           shape_string(it->second.shape()) + ", expected " +
                           shape_string(t.shape()));
    }
    t = it->second;
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kMissingFile, path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MVKT", 4) != 0) {
    throw DataError(DataErrorKind::kInvalid, path.string() + ": not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError(DataErrorKind::kInvalid,
                    path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.config_hash = get<std::uint64_t>(in, path);
  c.tag = get_string(in, path);
  const auto count = get<std::uint32_t>(in, path);
  for (std::uint32_t b = 0; b < count; ++b) {
    std::string name = get_string(in, path);
    const auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw DataError(DataErrorKind::kInvalid, path.string() + ": bad rank");
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(get<std::uint64_t>(in, path));
      numel *= d;
    }
    if (numel > (std::size_t{1} << 31)) throw DataError(DataErrorKind::kInvalid, path.string() + ": blob too large");
    std::vector<double> values(numel);
    for (auto& v : values) v = get<double>(in, path);
    c.tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return c;
}

}  // namespace mvkt
