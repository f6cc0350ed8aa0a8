// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_TRAINER_HPP
#define MSMT_TRAINER_HPP

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmt/config.hpp"
#include "msmt/data_synth.hpp"
#include "msmt/model.hpp"

namespace msmt {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row of the loss log, written after each batch.
struct LossRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double ca = 0.0;
  std::vector<double> redundancy;     // refinement stages
  std::vector<double> generator;      // L_G per stage
  std::vector<double> discriminator;  // L_D per stage
  double total = 0.0;                 // generator objective
};

std::string loss_csv_header(std::size_t stages);
std::string loss_csv_row(const LossRecord& record);

struct TrainOptions {
  /// When set, receives config.json, vocab.tsv, losses.csv and checkpoint.msmt
  /// (rewritten after every epoch).
  std::filesystem::path out_dir;
  std::ostream* progress = nullptr;
};

struct TrainResult {
  Model model;
  Vocabulary vocabulary;
  std::vector<LossRecord> log;
};

/// Alternating training: per batch one discriminator step over all stages,
/// then one generator step. Deterministic in the config. A non-finite loss
/// throws TrainingError after writing nonfinite_dump.txt to out_dir.
TrainResult train(const Config& config, const TrainOptions& options = {});
/// Same, on a caller-supplied corpus whose images match config.resolutions.
TrainResult train(const Config& config, const std::vector<CorpusItem>& corpus, const TrainOptions& options = {});

inline constexpr const char* kCheckpointFile = "checkpoint.msmt";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kVocabularyFile = "vocab.tsv";
inline constexpr const char* kLossFile = "losses.csv";

/// Rebuilds a model from a training output directory (or a checkpoint file
/// whose directory holds config.json and vocab.tsv).
struct LoadedModel {
  Config config;
  Vocabulary vocabulary;
  Model model;
};
LoadedModel load_trained(const std::filesystem::path& checkpoint);

}  // namespace msmt

#endif  // MSMT_TRAINER_HPP
