// SPDX-License-Identifier: Apache-2.0
#include "msmt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include "msmt/data_synth.hpp"
#include "msmt/losses.hpp"
#include "msmt/model.hpp"

namespace msmt {

namespace {

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::size_t> pick_entries(std::size_t numel, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> all(numel);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (numel <= count) return all;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  std::sample(all.begin(), all.end(), std::back_inserter(picked), static_cast<std::ptrdiff_t>(count), rng);
  return picked;
}

struct Probe {
  double value;
  std::uint64_t branches;
};

Probe evaluate(const LossFn& loss) {
  NoGradGuard guard;
  BranchProbe probe;
  const double v = loss().item();
  return {v, probe.fingerprint()};
}

Tensor random_leaf(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel_of(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor uniform_leaf(Shape shape, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(numel_of(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

/// Fixed random linear functional of a tensor, scaled to keep the audited
/// loss O(1) so central-difference roundoff stays near machine precision.
class Projection {
 public:
  explicit Projection(std::uint64_t seed) : rng_(seed) {}
  Tensor operator()(const Tensor& x) {
    auto [it, inserted] = weights_.try_emplace(count_++);
    if (inserted) {
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(x.numel())));
      std::vector<double> w(x.numel());
      for (auto& v : w) v = dist(rng_);
      it->second = Tensor::from(x.shape(), std::move(w));
    }
    return sum(mul(x, it->second));
  }
  void rewind() { count_ = 0; }

 private:
  std::mt19937_64 rng_;
  std::map<std::size_t, Tensor> weights_;
  std::size_t count_ = 0;
};

ParamList collected(const auto& module, const std::string& prefix) {
  ParamList out;
  module.collect(out, prefix);
  return out;
}

void append(ParamList& to, const ParamList& from) { to.insert(to.end(), from.begin(), from.end()); }

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

std::vector<GradcheckRow> audit(const std::string& group, const LossFn& loss, const ParamList& inputs,
                                const GradcheckOptions& options, std::uint64_t seed) {
  for (auto p : inputs) {
    if (!p.tensor.requires_grad()) throw std::invalid_argument("audit: " + p.name + " does not require a gradient");
    p.tensor.zero_grad();
  }
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : inputs) {
    const auto g = p.tensor.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  const std::uint64_t base_branches = evaluate(loss).branches;
  std::vector<GradcheckRow> rows;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Tensor x = inputs[t].tensor;
    GradcheckRow row{group, inputs[t].name};
    for (std::size_t idx : pick_entries(x.numel(), options.samples_per_tensor, seed ^ name_hash(inputs[t].name))) {
      const double original = x.data()[idx];
      double h = options.step;
      bool resolved = false;
      double numeric = 0.0;
      for (std::size_t attempt = 0; attempt <= options.kink_retries; ++attempt) {
        x.mutable_data()[idx] = original + h;
        const Probe plus = evaluate(loss);
        x.mutable_data()[idx] = original - h;
        const Probe minus = evaluate(loss);
        x.mutable_data()[idx] = original;
        if (plus.branches == base_branches && minus.branches == base_branches) {
          numeric = (plus.value - minus.value) / (2.0 * h);
          resolved = true;
          break;
        }
        ++row.kink_retries;
        h *= 0.1;
      }
      if (!resolved) {
        ++row.skipped;
        continue;
      }
      const double a = analytic[t][idx];
      row.max_rel_error = std::max(row.max_rel_error, relative_error(a, numeric, options.scale_floor));
      row.max_abs_error = std::max(row.max_abs_error, std::abs(a - numeric));
      ++row.checked;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool GradcheckReport::passed() const {
  return !rows.empty() && max_error() < tolerance &&
         std::all_of(rows.begin(), rows.end(), [](const GradcheckRow& r) { return r.checked > 0 || r.skipped == 0; });
}

double GradcheckReport::max_error() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.max_rel_error);
  return m;
}

std::vector<std::pair<std::string, double>> GradcheckReport::group_maxima() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().first != r.group) out.emplace_back(r.group, 0.0);
    out.back().second = std::max(out.back().second, r.max_rel_error);
  }
  return out;
}

std::string GradcheckReport::to_text(bool per_tensor) const {
  std::string s;
  char line[256];
  if (per_tensor) {
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "  %-14s %-40s entries=%-3zu retries=%-3zu rel=%.3e abs=%.3e\n", r.group.c_str(),
                    r.tensor.c_str(), r.checked, r.kink_retries, r.max_rel_error, r.max_abs_error);
      s += line;
    }
  }
  for (const auto& [group, err] : group_maxima()) {
    std::size_t checked = 0, retries = 0, skipped = 0, tensors = 0;
    for (const auto& r : rows) {
      if (r.group != group) continue;
      checked += r.checked;
      retries += r.kink_retries;
      skipped += r.skipped;
      ++tensors;
    }
    std::snprintf(line, sizeof line, "%-14s tensors=%-4zu entries=%-5zu kink_retries=%-3zu skipped=%-3zu max_rel_err=%.3e %s\n",
                  group.c_str(), tensors, checked, retries, skipped, err, err < tolerance ? "ok" : "FAIL");
    s += line;
  }
  std::snprintf(line, sizeof line, "overall max_rel_err=%.3e tolerance=%.1e %s\n", max_error(), tolerance,
                passed() ? "PASS" : "FAIL");
  return s + line;
}

GradcheckReport run_gradcheck(const Config& base, std::uint64_t seed, const GradcheckOptions& options) {
  Config config = base;
  config.seed = seed;
  config.validate();
  const Vocabulary vocab = scene_vocabulary();
  Model model = build_model(config, vocab.size());
  const Generator& gen = model.generator;

  std::mt19937_64 rng(seed);
  const auto item = sample_corpus(1, seed, config.resolutions).front();
  const std::vector<std::size_t> ids = item.tokens;
  const Tensor eps = sample_noise(config.n_ca, rng);
  const Tensor z = sample_noise(config.n_z, rng);

  GradcheckReport report;
  report.tolerance = options.tolerance;
  auto run = [&](const std::string& group, const LossFn& fn, const ParamList& inputs) {
    auto rows = audit(group, fn, inputs, options, seed ^ name_hash(group));
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  };

  // Text encoder, conditioning augmentation and initial generation.
  {
    Projection proj(seed + 1);
    ParamList inputs = collected(gen.encoder, "encoder");
    append(inputs, collected(gen.augmentation, "ca"));
    append(inputs, collected(gen.initial, "stage1"));
    run("mtwig", [&] {
      proj.rewind();
      EncodedText enc = gen.encoder.encode(ids);
      AugmentedSentence aug = gen.augmentation.apply(enc.sentence, eps.data());
      TextBatch batch{enc.words, enc.sentence, aug.resampled, z, aug.mu, aug.logvar};
      auto out = gen.initial.forward(batch);
      return add(proj(out.image), proj(out.features));
    }, inputs);
  }

  if (!gen.refinements.empty()) {
    const RefinementStage& stage = gen.refinements.front();
    const std::size_t s = stage.shape().input_resolution;
    Tensor previous = random_leaf({s, s, config.n_r}, 0.5, rng);
    Tensor words = random_leaf({ids.size(), config.n_w}, 0.5, rng);

    {
      Projection proj(seed + 2);
      ParamList inputs = collected(stage.heads.front(), "stage2.head0");
      inputs.push_back({"input.features", previous});
      inputs.push_back({"input.words", words});
      run("sdm", [&] {
        proj.rewind();
        auto pass = run_sdm(previous, words, previous, stage.grid(), stage.heads.front());
        return proj(pass.output.features);
      }, inputs);
    }
    {
      Projection proj(seed + 3);
      ParamList inputs = collected(stage, "stage2");
      inputs.push_back({"input.features", previous});
      inputs.push_back({"input.words", words});
      run("imhm", [&] {
        proj.rewind();
        auto out = stage.refine(previous, words);
        return add(proj(out.image), proj(out.features));
      }, inputs);
    }
  }

  {
    Projection proj(seed + 4);
    ParamList inputs;
    std::vector<Tensor> images;
    Tensor sentence = random_leaf({config.n_w}, 0.5, rng);
    for (std::size_t k = 0; k < model.discriminators.size(); ++k) {
      append(inputs, collected(model.discriminators[k], "D.stage" + std::to_string(k + 1)));
      const std::size_t r = config.resolutions[k];
      images.push_back(uniform_leaf({r, r, 3}, -1.0, 1.0, rng));
      inputs.push_back({"input.image" + std::to_string(k + 1), images.back()});
    }
    inputs.push_back({"input.sentence", sentence});
    run("discriminator", [&] {
      proj.rewind();
      Tensor total = Tensor::scalar(0.0);
      for (std::size_t k = 0; k < model.discriminators.size(); ++k) {
        auto sc = model.discriminators[k].score(images[k], sentence);
        total = add(total, add(proj(sc.unconditional), proj(sc.conditional)));
      }
      return total;
    }, inputs);
  }

  {
    // Loss stack on leaf inputs: scores, CA statistics and head outputs.
    constexpr std::size_t batch = 3;
    const std::size_t stages = config.stage_count();
    ParamList inputs;
    std::vector<StageScores> real, fake;
    for (std::size_t k = 0; k < stages; ++k) {
      const std::string tag = std::to_string(k + 1);
      real.push_back({uniform_leaf({batch}, 0.1, 0.9, rng), uniform_leaf({batch}, 0.1, 0.9, rng)});
      fake.push_back({uniform_leaf({batch}, 0.1, 0.9, rng), uniform_leaf({batch}, 0.1, 0.9, rng)});
      inputs.push_back({"real.unconditional" + tag, real.back().unconditional});
      inputs.push_back({"real.conditional" + tag, real.back().conditional});
      inputs.push_back({"fake.unconditional" + tag, fake.back().unconditional});
      inputs.push_back({"fake.conditional" + tag, fake.back().conditional});
    }
    std::vector<SampleTerms> samples;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::string tag = std::to_string(b + 1);
      SampleTerms t{random_leaf({config.n_ca}, 0.5, rng), random_leaf({config.n_ca}, 0.5, rng), {}};
      inputs.push_back({"mu" + tag, t.mu});
      inputs.push_back({"logvar" + tag, t.logvar});
      for (std::size_t k = 1; k < stages; ++k) {
        const std::size_t s = config.resolutions[k - 1];
        std::vector<Tensor> heads;
        for (std::size_t j = 0; j < config.head_count; ++j) {
          heads.push_back(random_leaf({s, s, config.n_r}, 1.0, rng));
          inputs.push_back({"heads" + tag + "." + std::to_string(k + 1) + "." + std::to_string(j + 1), heads.back()});
        }
        t.head_outputs.push_back(std::move(heads));
      }
      samples.push_back(std::move(t));
    }
    const LossWeights weights{config.lambda1, config.lambda2};
    run("losses", [&] {
      Tensor total = generator_loss(fake, samples, weights).total;
      for (std::size_t k = 0; k < stages; ++k) total = add(total, discriminator_loss(real[k], fake[k]));
      return total;
    }, inputs);
  }

  {
    // Full generator objective through every stage and discriminator.
    const auto items = sample_corpus(2, seed + 5, config.resolutions);
    std::vector<Tensor> batch_eps, batch_z;
    for (std::size_t b = 0; b < items.size(); ++b) {
      batch_eps.push_back(sample_noise(config.n_ca, rng));
      batch_z.push_back(sample_noise(config.n_z, rng));
    }
    const LossWeights weights{config.lambda1, config.lambda2};
    GradcheckOptions sparse = options;
    sparse.samples_per_tensor = std::max<std::size_t>(1, options.samples_per_tensor / 2);
    auto rows = audit("end_to_end", [&] {
      std::vector<Generator::Output> outs;
      for (std::size_t b = 0; b < items.size(); ++b) {
        outs.push_back(gen.forward(items[b].tokens, batch_eps[b].data(), batch_z[b].data()));
      }
      std::vector<StageScores> scores;
      for (std::size_t k = 0; k < model.discriminators.size(); ++k) {
        std::vector<Tensor> u, c;
        for (const auto& o : outs) {
          auto sc = model.discriminators[k].score(o.images[k], o.text.sentence);
          u.push_back(sc.unconditional);
          c.push_back(sc.conditional);
        }
        scores.push_back({stack(u), stack(c)});
      }
      std::vector<SampleTerms> terms;
      for (const auto& o : outs) {
        SampleTerms t{o.text.mu, o.text.logvar, {}};
        for (const auto& r : o.refined) t.head_outputs.push_back(r.head_outputs);
        terms.push_back(std::move(t));
      }
      return generator_loss(scores, terms, weights).total;
    }, model.all_params(), sparse, seed ^ name_hash("end_to_end"));
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

}  // namespace msmt
