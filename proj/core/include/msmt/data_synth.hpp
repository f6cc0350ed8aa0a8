// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_DATA_SYNTH_HPP
#define MSMT_DATA_SYNTH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "msmt/text.hpp"

namespace msmt {

enum class ShapeKind { Circle, Square, Triangle };
enum class Color { Red, Green, Blue, Yellow };
enum class SizeKind { Small, Large };
enum class Position { Top, Bottom, Left, Right, Center };

struct SceneSpec {
  ShapeKind shape = ShapeKind::Circle;
  Color color = Color::Red;
  SizeKind size = SizeKind::Small;
  Position position = Position::Center;

  bool operator==(const SceneSpec&) const = default;
};

inline constexpr std::size_t kSceneCombinations = 3 * 4 * 2 * 5;

/// Enumerates every SceneSpec; index in [0, kSceneCombinations).
SceneSpec scene_from_index(std::size_t index);
std::size_t scene_index(const SceneSpec& spec);

/// "a <size> <color> <shape> at the <position>"
std::string caption_of(const SceneSpec& spec);
/// Inverse of caption_of; throws std::invalid_argument on anything off-grammar.
SceneSpec parse_caption(std::string_view caption);

/// Every token the caption grammar can produce.
Vocabulary scene_vocabulary();

/// Background and shape colour values in [-1, 1].
inline constexpr double kBackground = -0.8;
std::array<double, 3> color_rgb(Color color);

/// Rasterizes the scene without anti-aliasing into a [r, r, 3] tensor.
Tensor render(const SceneSpec& spec, std::size_t resolution);

struct CorpusItem {
  SceneSpec spec;
  std::string caption;
  std::vector<std::size_t> tokens;
  std::vector<Tensor> images;  // one per requested resolution
};

/// Reproducible in (n, seed). Items walk shuffled passes over all scene
/// combinations, so n >= kSceneCombinations covers every combination.
std::vector<CorpusItem> sample_corpus(std::size_t n, std::uint64_t seed, const std::vector<std::size_t>& resolutions);

/// Writes <id>_<res>.ppm per item and resolution plus captions.tsv ("id<TAB>caption").
void export_corpus(const std::filesystem::path& dir, const std::vector<CorpusItem>& items,
                   const std::vector<std::size_t>& resolutions);

}  // namespace msmt

#endif  // MSMT_DATA_SYNTH_HPP
