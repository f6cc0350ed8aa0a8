// SPDX-License-Identifier: Apache-2.0
#include "msmt/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "msmt/image_io.hpp"

namespace msmt {

namespace {

constexpr std::array<const char*, 3> kShapeWords{"circle", "square", "triangle"};
constexpr std::array<const char*, 4> kColorWords{"red", "green", "blue", "yellow"};
constexpr std::array<const char*, 2> kSizeWords{"small", "large"};
constexpr std::array<const char*, 5> kPositionWords{"top", "bottom", "left", "right", "center"};

template <std::size_t N>
std::size_t lookup(const std::array<const char*, N>& words, const std::string& w, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (w == words[i]) return i;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + w + "'");
}

}  // namespace

SceneSpec scene_from_index(std::size_t index) {
  if (index >= kSceneCombinations) throw std::out_of_range("scene index out of range");
  SceneSpec s;
  s.position = static_cast<Position>(index % 5);
  index /= 5;
  s.size = static_cast<SizeKind>(index % 2);
  index /= 2;
  s.color = static_cast<Color>(index % 4);
  index /= 4;
  s.shape = static_cast<ShapeKind>(index);
  return s;
}

std::size_t scene_index(const SceneSpec& spec) {
  return ((static_cast<std::size_t>(spec.shape) * 4 + static_cast<std::size_t>(spec.color)) * 2 +
          static_cast<std::size_t>(spec.size)) * 5 + static_cast<std::size_t>(spec.position);
}

std::string caption_of(const SceneSpec& spec) {
  std::string out = "a ";
  out += kSizeWords[static_cast<std::size_t>(spec.size)];
  out += ' ';
  out += kColorWords[static_cast<std::size_t>(spec.color)];
  out += ' ';
  out += kShapeWords[static_cast<std::size_t>(spec.shape)];
  out += " at the ";
  out += kPositionWords[static_cast<std::size_t>(spec.position)];
  return out;
}

SceneSpec parse_caption(std::string_view caption) {
  std::istringstream is{std::string(caption)};
  std::vector<std::string> w;
  for (std::string t; is >> t;) w.push_back(t);
  if (w.size() != 7 || w[0] != "a" || w[4] != "at" || w[5] != "the") {
    throw std::invalid_argument("caption does not follow 'a <size> <color> <shape> at the <position>': '" +
                                std::string(caption) + "'");
  }
  SceneSpec s;
  s.size = static_cast<SizeKind>(lookup(kSizeWords, w[1], "size"));
  s.color = static_cast<Color>(lookup(kColorWords, w[2], "color"));
  s.shape = static_cast<ShapeKind>(lookup(kShapeWords, w[3], "shape"));
  s.position = static_cast<Position>(lookup(kPositionWords, w[6], "position"));
  return s;
}

Vocabulary scene_vocabulary() {
  std::vector<std::string> tokens{"a", "at", "the"};
  for (auto w : kSizeWords) tokens.emplace_back(w);
  for (auto w : kColorWords) tokens.emplace_back(w);
  for (auto w : kShapeWords) tokens.emplace_back(w);
  for (auto w : kPositionWords) tokens.emplace_back(w);
  return Vocabulary(tokens);
}

std::array<double, 3> color_rgb(Color color) {
  constexpr double hi = 0.8, lo = -0.6;
  switch (color) {
    case Color::Red: return {hi, lo, lo};
    case Color::Green: return {lo, hi, lo};
    case Color::Blue: return {lo, lo, hi};
    case Color::Yellow: return {hi, hi, lo};
  }
  return {lo, lo, lo};
}

Tensor render(const SceneSpec& spec, std::size_t resolution) {
  if (resolution != 16 && resolution != 32 && resolution != 64) {
    throw std::invalid_argument("render: resolution must be 16, 32 or 64, got " + std::to_string(resolution));
  }
  const double r = static_cast<double>(resolution);
  double cx = r / 2, cy = r / 2;
  switch (spec.position) {
    case Position::Top: cy = r / 4; break;
    case Position::Bottom: cy = 3 * r / 4; break;
    case Position::Left: cx = r / 4; break;
    case Position::Right: cx = 3 * r / 4; break;
    case Position::Center: break;
  }
  const double radius = spec.size == SizeKind::Small ? r / 8 : 3 * r / 16;
  // Triangle: apex up, height 2 * radius, area centroid at (cx, cy).
  const double apex = cy - 4.0 * radius / 3.0;
  const double base = cy + 2.0 * radius / 3.0;

  const auto rgb = color_rgb(spec.color);
  std::vector<double> px(resolution * resolution * 3, kBackground);
  for (std::size_t y = 0; y < resolution; ++y) {
    for (std::size_t x = 0; x < resolution; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const double py = static_cast<double>(y) + 0.5;
      const double dy = py - cy;
      bool inside = false;
      switch (spec.shape) {
        case ShapeKind::Circle: inside = dx * dx + dy * dy <= radius * radius; break;
        case ShapeKind::Square: inside = std::abs(dx) <= radius && std::abs(dy) <= radius; break;
        case ShapeKind::Triangle: inside = py >= apex && py <= base && std::abs(dx) <= (py - apex) / 2.0; break;
      }
      if (inside) std::copy(rgb.begin(), rgb.end(), px.begin() + static_cast<std::ptrdiff_t>((y * resolution + x) * 3));
    }
  }
  return Tensor::from({resolution, resolution, 3}, std::move(px));
}

std::vector<CorpusItem> sample_corpus(std::size_t n, std::uint64_t seed, const std::vector<std::size_t>& resolutions) {
  if (n == 0) throw std::invalid_argument("sample_corpus: n must be at least 1");
  const Vocabulary vocab = scene_vocabulary();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pass(kSceneCombinations);
  std::vector<CorpusItem> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % kSceneCombinations == 0) {
      std::iota(pass.begin(), pass.end(), std::size_t{0});
      std::shuffle(pass.begin(), pass.end(), rng);
    }
    CorpusItem item;
    item.spec = scene_from_index(pass[i % kSceneCombinations]);
    item.caption = caption_of(item.spec);
    item.tokens = vocab.encode(item.caption);
    for (auto res : resolutions) item.images.push_back(render(item.spec, res));
    items.push_back(std::move(item));
  }
  return items;
}

void export_corpus(const std::filesystem::path& dir, const std::vector<CorpusItem>& items,
                   const std::vector<std::size_t>& resolutions) {
  std::filesystem::create_directories(dir);
  std::ofstream captions(dir / "captions.tsv", std::ios::binary);
  if (!captions) throw std::runtime_error("cannot write " + (dir / "captions.tsv").string());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::ostringstream id;
    id << std::setw(6) << std::setfill('0') << i;
    captions << id.str() << '\t' << items[i].caption << '\n';
    for (std::size_t r = 0; r < resolutions.size() && r < items[i].images.size(); ++r) {
      write_ppm(dir / (id.str() + "_" + std::to_string(resolutions[r]) + ".ppm"), items[i].images[r]);
    }
  }
}

}  // namespace msmt
