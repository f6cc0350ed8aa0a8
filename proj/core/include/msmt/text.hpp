// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_TEXT_HPP
#define MSMT_TEXT_HPP

#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msmt/nn.hpp"

namespace msmt {

/// Dense token <-> id map. Ids are assigned in insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(const std::vector<std::string>& tokens);

  std::size_t add(const std::string& token);
  std::size_t id(std::string_view token) const;  // throws std::out_of_range
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Whitespace tokenization followed by id lookup; unknown words throw.
  std::vector<std::size_t> encode(std::string_view caption) const;
  std::string decode(std::span<const std::size_t> ids) const;

  /// "token<TAB>id" lines, UTF-8.
  void write(std::ostream& os) const;
  static Vocabulary read(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Word matrix W [L, N_w] and sentence vector s [N_w].
struct EncodedText {
  Tensor words;
  Tensor sentence;
};

/// Embedding table + mean pool + linear projection.
struct TextEncoder {
  Tensor embedding;  // [V, N_w]
  Linear projection;
  std::size_t max_length = 8;

  static TextEncoder create(ParamInit& init, std::size_t vocab_size, std::size_t word_dim,
                            std::size_t max_length = 8);
  std::size_t word_dim() const { return embedding.dim(1); }
  EncodedText encode(std::span<const std::size_t> ids) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

struct AugmentedSentence {
  Tensor resampled;  // s'
  Tensor mu;
  Tensor logvar;
};

/// Conditioning augmentation: s' = mu + exp(logvar / 2) * eps, with mu and
/// logvar linear in s.
struct ConditioningAugmentation {
  Linear mu;
  Linear logvar;

  static ConditioningAugmentation create(ParamInit& init, std::size_t sentence_dim,
                                         std::size_t output_dim);
  std::size_t output_dim() const { return mu.weight.dim(1); }
  AugmentedSentence apply(const Tensor& sentence, std::span<const double> eps) const;
  AugmentedSentence apply(const Tensor& sentence, std::mt19937_64& rng) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

/// KL(N(mu, exp(logvar)) || N(0, I)) = -1/2 sum(1 + logvar - mu^2 - exp(logvar)).
Tensor kl_loss(const Tensor& mu, const Tensor& logvar);

/// Everything the initial stage consumes for one caption.
struct TextBatch {
  Tensor words;      // W [L, N_w]
  Tensor sentence;   // s [N_w]
  Tensor resampled;  // s' [N_ca]
  Tensor noise;      // z [N_z]
  Tensor mu;
  Tensor logvar;

  std::size_t length() const { return words.dim(0); }
};

/// Draws N(0,1) noise of the given size from `rng`.
Tensor sample_noise(std::size_t size, std::mt19937_64& rng);

}  // namespace msmt

#endif  // MSMT_TEXT_HPP
