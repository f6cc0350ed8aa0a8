// SPDX-License-Identifier: Apache-2.0
#include "msmt/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace msmt {

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add(t);
}

std::size_t Vocabulary::add(const std::string& token) {
  if (token.empty() || token.find_first_of(" \t\r\n") != std::string::npos) {
    throw std::invalid_argument("vocabulary tokens must be non-empty and contain no whitespace");
  }
  auto [it, inserted] = ids_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) throw std::out_of_range("out-of-vocabulary token '" + std::string(token) + "'");
  return it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<std::size_t> Vocabulary::encode(std::string_view caption) const {
  std::istringstream is{std::string(caption)};
  std::vector<std::size_t> ids;
  std::string word;
  while (is >> word) ids.push_back(id(word));
  return ids;
}

std::string Vocabulary::decode(std::span<const std::size_t> ids) const {
  std::string out;
  for (auto i : ids) {
    if (!out.empty()) out += ' ';
    out += token(i);
  }
  return out;
}

void Vocabulary::write(std::ostream& os) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::read(std::istream& is) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("vocabulary line without tab: '" + line + "'");
    rows.emplace_back(std::stoul(line.substr(tab + 1)), line.substr(0, tab));
  }
  std::vector<std::string> tokens(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (auto& [id, tok] : rows) {
    if (id >= rows.size() || seen[id]) throw std::runtime_error("vocabulary ids are not dense");
    seen[id] = true;
    tokens[id] = tok;
  }
  return Vocabulary(tokens);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write(os);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return read(is);
}

TextEncoder TextEncoder::create(ParamInit& init, std::size_t vocab_size, std::size_t word_dim,
                                std::size_t max_length) {
  TextEncoder enc;
  enc.embedding = init.normal({vocab_size, word_dim}, 1.0);
  enc.projection = Linear::create(init, word_dim, word_dim);
  enc.max_length = max_length;
  return enc;
}

EncodedText TextEncoder::encode(std::span<const std::size_t> ids) const {
  if (ids.empty() || ids.size() > max_length) {
    throw ShapeError("caption length " + std::to_string(ids.size()) + " outside [1, " +
                     std::to_string(max_length) + "]");
  }
  Tensor words = msmt::embedding(embedding, ids);
  Tensor pooled = mul(sum(words, 0), 1.0 / static_cast<double>(ids.size()));
  return {words, projection(pooled)};
}

void TextEncoder::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".embedding", embedding});
  projection.collect(out, prefix + ".projection");
}

ConditioningAugmentation ConditioningAugmentation::create(ParamInit& init, std::size_t sentence_dim,
                                                          std::size_t output_dim) {
  return {Linear::create(init, sentence_dim, output_dim), Linear::create(init, sentence_dim, output_dim)};
}

AugmentedSentence ConditioningAugmentation::apply(const Tensor& sentence, std::span<const double> eps) const {
  const std::size_t n = output_dim();
  if (eps.size() != n) throw ShapeError("conditioning augmentation: eps has wrong length");
  Tensor m = mu(sentence);
  Tensor lv = logvar(sentence);
  Tensor noise = Tensor::from({n}, std::vector<double>(eps.begin(), eps.end()));
  Tensor resampled = add(m, mul(exp(mul(lv, 0.5)), noise));
  return {resampled, m, lv};
}

AugmentedSentence ConditioningAugmentation::apply(const Tensor& sentence, std::mt19937_64& rng) const {
  Tensor eps = sample_noise(output_dim(), rng);
  return apply(sentence, eps.data());
}

void ConditioningAugmentation::collect(ParamList& out, const std::string& prefix) const {
  mu.collect(out, prefix + ".mu");
  logvar.collect(out, prefix + ".logvar");
}

Tensor kl_loss(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape() != logvar.shape()) throw ShapeError("kl_loss: mu and logvar shapes differ");
  Tensor inner = sub(sub(add(logvar, 1.0), square(mu)), exp(logvar));
  return mul(sum(inner), -0.5);
}

Tensor sample_noise(std::size_t size, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> values(size);
  for (auto& v : values) v = dist(rng);
  return Tensor::from({size}, std::move(values));
}

}  // namespace msmt
