// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_CHECKPOINT_HPP
#define MSMT_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmt/nn.hpp"

namespace msmt {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const CheckpointRecord&) const = default;
};

/// Little-endian: "MSMT", u32 version, u32 record count, then per record
/// u16 name length, name bytes, u8 rank, u64 dims, f32 payload.
void write_checkpoint(std::ostream& os, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(std::istream& is);

std::vector<CheckpointRecord> snapshot(const ParamList& params);
/// Copies records into same-named parameters. Names and shapes must match
/// one to one.
void restore(const std::vector<CheckpointRecord>& records, const ParamList& params);

void save_checkpoint(const std::filesystem::path& path, const ParamList& params);
std::vector<CheckpointRecord> load_checkpoint(const std::filesystem::path& path);

}  // namespace msmt

#endif  // MSMT_CHECKPOINT_HPP
