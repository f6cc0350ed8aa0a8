// SPDX-License-Identifier: Apache-2.0
#include "msmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "msmt/checkpoint.hpp"
#include "msmt/losses.hpp"
#include "msmt/optim.hpp"

namespace msmt {

namespace {

// Separates the training stream from the parameter and corpus streams.
constexpr std::uint64_t kTrainStream = 0x9e3779b97f4a7c15ULL;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool all_finite(const LossRecord& r) {
  auto ok = [](double v) { return std::isfinite(v); };
  return ok(r.ca) && ok(r.total) && std::all_of(r.redundancy.begin(), r.redundancy.end(), ok) &&
         std::all_of(r.generator.begin(), r.generator.end(), ok) &&
         std::all_of(r.discriminator.begin(), r.discriminator.end(), ok);
}

void set_trainable(const ParamList& params, bool flag) {
  for (auto p : params) p.tensor.set_requires_grad(flag);
}

Tensor stack_scalars(const std::vector<Tensor>& v) { return reshape(stack(v), {v.size()}); }

void dump_batch(const std::filesystem::path& dir, const LossRecord& record, const std::vector<const CorpusItem*>& batch) {
  if (dir.empty()) return;
  std::ofstream os(dir / "nonfinite_dump.txt");
  os << loss_csv_header(record.generator.size()) << '\n' << loss_csv_row(record) << '\n';
  for (const auto* item : batch) os << item->caption << '\n';
}

}  // namespace

std::string loss_csv_header(std::size_t stages) {
  std::string h = "step,epoch,L_CA";
  for (std::size_t k = 2; k <= stages; ++k) h += ",L_RED_" + std::to_string(k);
  for (std::size_t k = 1; k <= stages; ++k) h += ",L_G_" + std::to_string(k);
  for (std::size_t k = 1; k <= stages; ++k) h += ",L_D_" + std::to_string(k);
  return h + ",L_G_total";
}

std::string loss_csv_row(const LossRecord& r) {
  std::string row = std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + fmt(r.ca);
  for (double v : r.redundancy) row += "," + fmt(v);
  for (double v : r.generator) row += "," + fmt(v);
  for (double v : r.discriminator) row += "," + fmt(v);
  return row + "," + fmt(r.total);
}

TrainResult train(const Config& config, const TrainOptions& options) {
  config.validate();
  return train(config, sample_corpus(config.corpus_size, config.seed, config.resolutions), options);
}

TrainResult train(const Config& config, const std::vector<CorpusItem>& corpus, const TrainOptions& options) {
  config.validate();
  if (corpus.empty()) throw TrainingError("train: empty corpus");
  const std::size_t stages = config.stage_count();
  for (const auto& item : corpus) {
    if (item.images.size() != stages) throw TrainingError("train: corpus images do not match the stage count");
  }

  TrainResult result{build_model(config, scene_vocabulary().size()), scene_vocabulary(), {}};
  Model& model = result.model;
  const ParamList g_params = model.generator_params();
  const ParamList d_params = model.discriminator_params();
  const AdamOptions adam{config.learning_rate, config.beta1, config.beta2};
  Adam g_opt(g_params, adam);
  Adam d_opt(d_params, adam);
  const LossWeights weights{config.lambda1, config.lambda2};

  std::ofstream loss_file;
  const auto& dir = options.out_dir;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    config.save(dir / kConfigFile);
    result.vocabulary.save(dir / kVocabularyFile);
    loss_file.open(dir / kLossFile, std::ios::binary);
    if (!loss_file) throw TrainingError("train: cannot write " + (dir / kLossFile).string());
    loss_file << loss_csv_header(stages) << '\n';
    save_checkpoint(dir / kCheckpointFile, model.all_params());
  }

  std::mt19937_64 rng(config.seed ^ kTrainStream);
  std::vector<std::size_t> order(corpus.size());
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const CorpusItem*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&corpus[order[i]]);

      std::vector<Generator::Output> fakes;
      fakes.reserve(batch.size());
      for (const auto* item : batch) fakes.push_back(model.generator.forward(item->tokens, rng));

      LossRecord record;
      record.step = step;
      record.epoch = epoch;

      // Discriminator step on detached samples.
      d_opt.zero_grad();
      Tensor d_total = Tensor::scalar(0.0);
      for (std::size_t k = 0; k < stages; ++k) {
        std::vector<Tensor> ru, rc, fu, fc;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          const Tensor s = fakes[b].text.sentence.detach();
          auto real = model.discriminators[k].score(batch[b]->images[k], s);
          auto fake = model.discriminators[k].score(fakes[b].images[k].detach(), s);
          ru.push_back(real.unconditional);
          rc.push_back(real.conditional);
          fu.push_back(fake.unconditional);
          fc.push_back(fake.conditional);
        }
        Tensor ld = discriminator_loss({stack_scalars(ru), stack_scalars(rc)}, {stack_scalars(fu), stack_scalars(fc)});
        record.discriminator.push_back(ld.item());
        d_total = add(d_total, ld);
      }
      d_total.backward();
      d_opt.step();

      // Generator step against the updated discriminators.
      g_opt.zero_grad();
      set_trainable(d_params, false);
      std::vector<StageScores> scores;
      for (std::size_t k = 0; k < stages; ++k) {
        std::vector<Tensor> fu, fc;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          auto fake = model.discriminators[k].score(fakes[b].images[k], fakes[b].text.sentence);
          fu.push_back(fake.unconditional);
          fc.push_back(fake.conditional);
        }
        scores.push_back({stack_scalars(fu), stack_scalars(fc)});
      }
      std::vector<SampleTerms> terms;
      for (const auto& f : fakes) {
        SampleTerms t{f.text.mu, f.text.logvar, {}};
        for (const auto& r : f.refined) t.head_outputs.push_back(r.head_outputs);
        terms.push_back(std::move(t));
      }
      GeneratorLoss gl = generator_loss(scores, terms, weights);
      record.ca = gl.ca.item();
      for (const auto& r : gl.redundancy) record.redundancy.push_back(r.item());
      for (const auto& a : gl.adversarial) record.generator.push_back(a.item());
      record.total = gl.total.item();

      if (!all_finite(record)) {
        set_trainable(d_params, true);
        dump_batch(dir, record, batch);
        throw TrainingError("train: non-finite loss at step " + std::to_string(step) + ": " + loss_csv_row(record));
      }
      gl.total.backward();
      g_opt.step();
      set_trainable(d_params, true);

      if (loss_file.is_open()) loss_file << loss_csv_row(record) << '\n';
      result.log.push_back(std::move(record));
      ++step;
    }

    if (!dir.empty()) {
      loss_file.flush();
      save_checkpoint(dir / kCheckpointFile, model.all_params());
    }
    if (options.progress) {
      const auto& last = result.log.back();
      *options.progress << "epoch " << epoch + 1 << "/" << config.epochs << "  L_G " << fmt(last.total) << "  L_D";
      for (double v : last.discriminator) *options.progress << ' ' << fmt(v);
      *options.progress << '\n';
    }
  }
  return result;
}

LoadedModel load_trained(const std::filesystem::path& checkpoint) {
  std::filesystem::path file = checkpoint;
  if (std::filesystem::is_directory(file)) file /= kCheckpointFile;
  const auto dir = file.parent_path();
  LoadedModel out{Config::load(dir / kConfigFile), Vocabulary::load(dir / kVocabularyFile), {}};
  out.model = build_model(out.config, out.vocabulary.size());
  restore(load_checkpoint(file), out.model.all_params());
  return out;
}

}  // namespace msmt
