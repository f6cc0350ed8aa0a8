// SPDX-License-Identifier: Apache-2.0
#include "msmt/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace msmt {

using nlohmann::json;

std::string_view preset_name(Preset preset) { return preset == Preset::Paper ? "paper" : "desk"; }

namespace {

Preset parse_preset(const json& value) {
  if (!value.is_string()) throw ConfigError("config: 'preset' must be a string");
  const auto s = value.get<std::string>();
  if (s == "desk") return Preset::Desk;
  if (s == "paper") return Preset::Paper;
  throw ConfigError("config: unknown preset '" + s + "'");
}

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError("config: '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

bool power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

Config Config::desk() {
  Config c;
  c.resolutions = {16, 32};
  c.n_w = 16;
  c.n_r = 8;
  c.n_m = 16;
  c.n_z = 8;
  c.n_ca = 16;
  c.h = 4;
  c.head_count = 2;
  c.ks = 3;
  c.lambda1 = 1.0;
  c.lambda2 = 0.5;
  c.learning_rate = 0.0002;
  c.beta1 = 0.5;
  c.beta2 = 0.999;
  c.batch_size = 8;
  c.epochs = 30;
  c.seed = 0;
  c.corpus_size = 240;
  c.preset = Preset::Desk;
  return c;
}

Config Config::paper() {
  Config c;
  c.resolutions = {64, 128, 256};
  c.n_w = 256;
  c.n_r = 48;
  c.n_m = 96;
  c.n_z = 100;
  c.n_ca = 100;
  c.h = 8;
  c.head_count = 6;
  c.ks = 3;
  c.lambda1 = 1.0;
  c.lambda2 = 0.5;
  c.learning_rate = 0.0002;
  c.beta1 = 0.5;
  c.beta2 = 0.999;
  c.batch_size = 20;
  c.epochs = 700;
  c.seed = 0;
  c.corpus_size = 240;
  c.preset = Preset::Paper;
  return c;
}

Config Config::for_preset(Preset preset) { return preset == Preset::Paper ? paper() : desk(); }

Config Config::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  Config c = desk();
  if (auto it = j.find("preset"); it != j.end()) c = for_preset(parse_preset(*it));

  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    if (key == "resolutions") {
      if (!value.is_array()) throw ConfigError("config: 'resolutions' must be an array");
      c.resolutions.clear();
      for (const auto& r : value) c.resolutions.push_back(as_count(r, key));
    } else if (key == "n_w") c.n_w = as_count(value, key);
    else if (key == "n_r") c.n_r = as_count(value, key);
    else if (key == "n_m") c.n_m = as_count(value, key);
    else if (key == "n_z") c.n_z = as_count(value, key);
    else if (key == "n_ca") c.n_ca = as_count(value, key);
    else if (key == "h") c.h = as_count(value, key);
    else if (key == "head_count") c.head_count = as_count(value, key);
    else if (key == "ks") c.ks = as_count(value, key);
    else if (key == "lambda1") c.lambda1 = as_real(value, key);
    else if (key == "lambda2") c.lambda2 = as_real(value, key);
    else if (key == "learning_rate") c.learning_rate = as_real(value, key);
    else if (key == "beta1") c.beta1 = as_real(value, key);
    else if (key == "beta2") c.beta2 = as_real(value, key);
    else if (key == "batch_size") c.batch_size = as_count(value, key);
    else if (key == "epochs") c.epochs = as_count(value, key);
    else if (key == "seed") c.seed = as_count(value, key);
    else if (key == "corpus_size") c.corpus_size = as_count(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_json(buf.str());
}

std::string Config::to_json() const {
  json j;
  j["resolutions"] = resolutions;
  j["n_w"] = n_w;
  j["n_r"] = n_r;
  j["n_m"] = n_m;
  j["n_z"] = n_z;
  j["n_ca"] = n_ca;
  j["h"] = h;
  j["head_count"] = head_count;
  j["ks"] = ks;
  j["lambda1"] = lambda1;
  j["lambda2"] = lambda2;
  j["learning_rate"] = learning_rate;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["seed"] = seed;
  j["corpus_size"] = corpus_size;
  j["preset"] = std::string(preset_name(preset));
  return j.dump(2);
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("config: cannot write " + path.string());
  os << to_json() << '\n';
}

void Config::validate() const {
  if (resolutions.empty()) throw ConfigError("config: at least one stage resolution is required");
  if (!power_of_two(resolutions.front()) || resolutions.front() < 8) {
    throw ConfigError("config: first resolution must be a power of two >= 8");
  }
  for (std::size_t k = 1; k < resolutions.size(); ++k) {
    if (resolutions[k] != 2 * resolutions[k - 1]) throw ConfigError("config: each resolution must double the previous one");
  }
  if (n_w == 0 || n_r == 0 || n_m == 0 || n_z == 0 || n_ca == 0) throw ConfigError("config: dimensions must be positive");
  if (ks == 0) throw ConfigError("config: ks must be positive");
  if (head_count == 0) throw ConfigError("config: head_count must be positive");
  if (resolutions.size() > 1) {
    if (h == 0) throw ConfigError("config: h must be positive");
    for (std::size_t k = 0; k + 1 < resolutions.size(); ++k) {
      if (resolutions[k] % h != 0) throw ConfigError("config: h must divide every refined resolution");
    }
  }
  if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("config: beta1 and beta2 must lie in [0, 1)");
  }
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("config: loss weights must be non-negative");
  if (batch_size == 0) throw ConfigError("config: batch_size must be positive");
  if (corpus_size == 0) throw ConfigError("config: corpus_size must be positive");
}

}  // namespace msmt
