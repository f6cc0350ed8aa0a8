// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_CONFIG_HPP
#define MSMT_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msmt {

enum class Preset { Desk, Paper };

std::string_view preset_name(Preset preset);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Config {
  std::vector<std::size_t> resolutions;  // one per stage, each twice the previous
  std::size_t n_w = 0;
  std::size_t n_r = 0;
  std::size_t n_m = 0;
  std::size_t n_z = 0;
  std::size_t n_ca = 0;
  std::size_t h = 0;
  std::size_t head_count = 0;
  std::size_t ks = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double learning_rate = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::size_t batch_size = 0;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  std::size_t corpus_size = 0;
  Preset preset = Preset::Desk;

  static Config desk();
  static Config paper();
  static Config for_preset(Preset preset);

  /// Keys absent from the JSON object keep the values of its "preset"
  /// (desk when absent). Unknown keys and wrong types throw ConfigError.
  static Config from_json(std::string_view text);
  static Config load(const std::filesystem::path& path);
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;

  /// Throws ConfigError when the stages cannot be built from these values.
  void validate() const;

  std::size_t stage_count() const { return resolutions.size(); }
  /// Discriminator width, derived from the feature width.
  std::size_t discriminator_channels() const { return 2 * n_r; }

  bool operator==(const Config&) const = default;
};

}  // namespace msmt

#endif  // MSMT_CONFIG_HPP
