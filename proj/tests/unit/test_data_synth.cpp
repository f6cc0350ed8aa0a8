// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "msmt/data_synth.hpp"
#include "msmt/image_io.hpp"
#include "support.hpp"

using namespace msmt;
using msmt::testing::values;

TEST_CASE("scene enumeration and captions") {
  std::set<std::string> captions;
  for (std::size_t i = 0; i < kSceneCombinations; ++i) {
    const SceneSpec s = scene_from_index(i);
    CHECK(scene_index(s) == i);
    const std::string c = caption_of(s);
    CHECK(parse_caption(c) == s);
    captions.insert(c);
  }
  CHECK(captions.size() == 120);
  CHECK(caption_of({ShapeKind::Triangle, Color::Yellow, SizeKind::Large, Position::Left}) ==
        "a large yellow triangle at the left");
  CHECK(parse_caption("  a small red circle   at the top ") ==
        SceneSpec{ShapeKind::Circle, Color::Red, SizeKind::Small, Position::Top});
  CHECK_THROWS_AS(scene_from_index(120), std::out_of_range);
  for (const char* bad : {"", "a small red circle at the", "a small red circle at the moon", "the small red circle at the top",
                          "a tiny red circle at the top", "a small red circle at the top now", "a small red hexagon at the top"}) {
    CHECK_THROWS_AS(parse_caption(bad), std::invalid_argument);
  }
}

TEST_CASE("vocabulary covers the grammar") {
  const Vocabulary v = scene_vocabulary();
  CHECK(v.size() == 17);
  for (std::size_t i = 0; i < kSceneCombinations; ++i) CHECK(v.encode(caption_of(scene_from_index(i))).size() == 7);
}

TEST_CASE("rendering") {
  for (std::size_t res : {16u, 32u, 64u}) {
    for (std::size_t i = 0; i < kSceneCombinations; ++i) {
      const SceneSpec s = scene_from_index(i);
      Tensor img = render(s, res);
      REQUIRE(img.shape() == Shape{res, res, 3});
      const auto rgb = color_rgb(s.color);
      double sx = 0, sy = 0, n = 0;
      for (std::size_t y = 0; y < res; ++y)
        for (std::size_t x = 0; x < res; ++x) {
          const double r = img.at({y, x, 0}), g = img.at({y, x, 1}), b = img.at({y, x, 2});
          if (r == kBackground && g == kBackground && b == kBackground) continue;
          // every foreground pixel carries exactly the scene colour
          CHECK((r == rgb[0] && g == rgb[1] && b == rgb[2]));
          sx += x + 0.5;
          sy += y + 0.5;
          n += 1;
        }
      REQUIRE(n > 0);
      const double rr = static_cast<double>(res);
      double ex = rr / 2, ey = rr / 2;
      if (s.position == Position::Top) ey = rr / 4;
      if (s.position == Position::Bottom) ey = 3 * rr / 4;
      if (s.position == Position::Left) ex = rr / 4;
      if (s.position == Position::Right) ex = 3 * rr / 4;
      CHECK(std::abs(sx / n - ex) <= 1.0);
      CHECK(std::abs(sy / n - ey) <= 1.0);
    }
  }
  // large shapes cover more pixels than small ones
  auto area = [](const Tensor& t) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < t.numel(); i += 3) k += t[i] != kBackground || t[i + 1] != kBackground;
    return k;
  };
  for (auto shape : {ShapeKind::Circle, ShapeKind::Square, ShapeKind::Triangle})
    CHECK(area(render({shape, Color::Green, SizeKind::Large, Position::Center}, 32)) >
          area(render({shape, Color::Green, SizeKind::Small, Position::Center}, 32)));

  Tensor red = render({ShapeKind::Square, Color::Red, SizeKind::Large, Position::Center}, 16);
  CHECK(red.at({8, 8, 0}) == 0.8);
  CHECK(red.at({8, 8, 1}) == -0.6);
  CHECK(red.at({0, 0, 0}) == kBackground);
  CHECK_THROWS_AS(render({}, 24), std::invalid_argument);
}

TEST_CASE("corpus sampling") {
  auto a = sample_corpus(240, 5, {16, 32});
  auto b = sample_corpus(240, 5, {16, 32});
  auto c = sample_corpus(240, 6, {16, 32});
  std::map<std::size_t, int> counts;
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].caption == b[i].caption);
    CHECK(values(a[i].images[1]) == values(b[i].images[1]));
    CHECK(a[i].images.size() == 2);
    CHECK(a[i].images[0].dim(0) == 16);
    differs |= a[i].caption != c[i].caption;
    ++counts[scene_index(a[i].spec)];
  }
  CHECK(differs);
  CHECK(counts.size() == kSceneCombinations);
  for (auto [k, n] : counts) CHECK(n == 2);
  CHECK_THROWS_AS(sample_corpus(0, 1, {16}), std::invalid_argument);
}

TEST_CASE("export and ppm round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "msmt_test_export";
  std::filesystem::remove_all(dir);
  auto items = sample_corpus(3, 9, {16, 32});
  export_corpus(dir, items, {16, 32});
  std::ifstream captions(dir / "captions.tsv");
  std::string line;
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(std::getline(captions, line));
    CHECK(line == "00000" + std::to_string(i) + "\t" + items[i].caption);
    Tensor back = read_ppm(dir / ("00000" + std::to_string(i) + "_32.ppm"));
    REQUIRE(back.shape() == items[i].images[1].shape());
    for (std::size_t k = 0; k < back.numel(); ++k) CHECK(std::abs(back[k] - items[i].images[1][k]) <= 1.0 / 255.0);
  }
  CHECK(to_byte(-1.0) == 0);
  CHECK(to_byte(1.0) == 255);
  CHECK(to_byte(0.0) == 128);
  CHECK(to_byte(7.0) == 255);
  std::istringstream junk("P3 2 2 255\n");
  CHECK_THROWS(read_ppm(junk));
  std::filesystem::remove_all(dir);
}
