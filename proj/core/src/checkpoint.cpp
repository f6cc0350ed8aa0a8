// SPDX-License-Identifier: Apache-2.0
#include "msmt/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace msmt {

namespace {

template <typename T>
void put(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), sizeof(T))) throw CheckpointError("checkpoint: unexpected end of data");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

constexpr std::array<char, 4> kMagic{'M', 'S', 'M', 'T'};

}  // namespace

void write_checkpoint(std::ostream& os, const std::vector<CheckpointRecord>& records) {
  if (records.size() > std::numeric_limits<std::uint32_t>::max()) throw CheckpointError("checkpoint: too many records");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.name.size() > std::numeric_limits<std::uint16_t>::max()) throw CheckpointError("checkpoint: name too long: " + r.name);
    if (r.shape.size() > std::numeric_limits<std::uint8_t>::max()) throw CheckpointError("checkpoint: rank too large: " + r.name);
    if (numel_of(r.shape) != r.values.size()) throw CheckpointError("checkpoint: payload size mismatch for " + r.name);
    put<std::uint16_t>(os, static_cast<std::uint16_t>(r.name.size()));
    os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(r.shape.size()));
    for (auto d : r.shape) put<std::uint64_t>(os, d);
    for (float v : r.values) put<float>(os, v);
  }
  if (!os) throw CheckpointError("checkpoint: write failed");
}

std::vector<CheckpointRecord> read_checkpoint(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw CheckpointError("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = get<std::uint32_t>(is);
  std::vector<CheckpointRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointRecord r;
    r.name.resize(get<std::uint16_t>(is));
    if (!is.read(r.name.data(), static_cast<std::streamsize>(r.name.size()))) throw CheckpointError("checkpoint: truncated name");
    const auto rank = get<std::uint8_t>(is);
    for (std::uint8_t d = 0; d < rank; ++d) r.shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(is)));
    r.values.resize(numel_of(r.shape));
    for (auto& v : r.values) v = get<float>(is);
    records.push_back(std::move(r));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
  return records;
}

std::vector<CheckpointRecord> snapshot(const ParamList& params) {
  std::vector<CheckpointRecord> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    CheckpointRecord r{p.name, p.tensor.shape(), {}};
    const auto v = p.tensor.data();
    r.values.assign(v.begin(), v.end());
    out.push_back(std::move(r));
  }
  return out;
}

void restore(const std::vector<CheckpointRecord>& records, const ParamList& params) {
  if (records.size() != params.size()) {
    throw CheckpointError("checkpoint: holds " + std::to_string(records.size()) + " tensors, model has " +
                          std::to_string(params.size()));
  }
  std::unordered_map<std::string, const CheckpointRecord*> by_name;
  for (const auto& r : records) by_name.emplace(r.name, &r);
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint: missing tensor " + p.name);
    if (it->second->shape != p.tensor.shape()) {
      throw CheckpointError("checkpoint: shape mismatch for " + p.name + ": " + to_string(it->second->shape) + " vs " +
                            to_string(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    auto dst = t.mutable_data();
    const auto& src = it->second->values;
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]);
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("checkpoint: cannot write " + path.string());
  write_checkpoint(os, snapshot(params));
}

std::vector<CheckpointRecord> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot read " + path.string());
  return read_checkpoint(is);
}

}  // namespace msmt
