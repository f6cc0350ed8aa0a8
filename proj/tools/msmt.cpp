// SPDX-License-Identifier: Apache-2.0
// msmt: train, sample, audit and evaluate the desk-scale text-to-image model.
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "msmt/checkpoint.hpp"
#include "msmt/data_synth.hpp"
#include "msmt/evaluation.hpp"
#include "msmt/gradcheck.hpp"
#include "msmt/image_io.hpp"
#include "msmt/sdm.hpp"
#include "msmt/trainer.hpp"

namespace fs = std::filesystem;

namespace {

msmt::Config config_or_desk(const std::string& path) { return path.empty() ? msmt::Config::desk() : msmt::Config::load(path); }

int cmd_train(const std::string& config_path, const fs::path& out, bool quiet) {
  const auto config = config_or_desk(config_path);
  msmt::TrainOptions options;
  options.out_dir = out;
  options.progress = quiet ? nullptr : &std::cerr;
  const auto result = msmt::train(config, options);
  std::cout << "trained " << result.log.size() << " steps; checkpoint " << (out / msmt::kCheckpointFile).string() << '\n';
  return 0;
}

int cmd_generate(const fs::path& ckpt, const std::string& caption, std::uint64_t seed, const fs::path& out,
                 bool attention) {
  const auto loaded = msmt::load_trained(ckpt);
  const auto ids = loaded.vocabulary.encode(caption);
  std::mt19937_64 rng(seed);
  msmt::NoGradGuard guard;
  const auto output = loaded.model.generator.forward(ids, rng);
  fs::create_directories(out);
  for (std::size_t k = 0; k < output.images.size(); ++k) {
    const auto res = output.images[k].dim(0);
    const fs::path file = out / ("stage" + std::to_string(k + 1) + "_" + std::to_string(res) + ".ppm");
    msmt::write_ppm(file, output.images[k]);
    std::cout << file.string() << '\n';
  }
  if (attention) {
    for (std::size_t k = 0; k < output.refined.size(); ++k) {
      // Recompute each head's addressing field for the dump.
      const auto& stage = loaded.model.generator.refinements[k];
      const auto& r = output.refined[k];
      const msmt::Tensor previous = k == 0 ? output.initial.features : output.refined[k - 1].features;
      msmt::Tensor current = previous;
      for (std::size_t t = 0; t < stage.heads.size(); ++t) {
        const auto pass = msmt::run_sdm(previous, output.text.words, current, stage.grid(), stage.heads[t]);
        const fs::path file = out / ("attention_stage" + std::to_string(k + 2) + "_head" + std::to_string(t + 1) + ".csv");
        std::ofstream os(file);
        msmt::write_attention_csv(os, pass.attention);
        current = r.updates[t];
        std::cout << file.string() << '\n';
      }
    }
  }
  return 0;
}

int cmd_gradcheck(const std::string& config_path, std::uint64_t seed, std::size_t samples, bool verbose) {
  msmt::GradcheckOptions options;
  options.samples_per_tensor = samples;
  const auto report = msmt::run_gradcheck(config_or_desk(config_path), seed, options);
  std::cout << report.to_text(verbose);
  return report.passed() ? 0 : 1;
}

int cmd_eval(const fs::path& ckpt, std::size_t n, const fs::path& out, std::uint64_t extractor_seed,
             std::uint64_t eval_seed) {
  const auto loaded = msmt::load_trained(ckpt);
  const auto report = msmt::evaluate(loaded.model.generator, loaded.config, n, extractor_seed, eval_seed);
  const std::string json = report.to_json();
  if (out.empty()) {
    std::cout << json << '\n';
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out.string());
    os << json << '\n';
    std::cout << "fd " << report.fd << " -> " << out.string() << '\n';
  }
  return 0;
}

int cmd_export(std::size_t n, std::uint64_t seed, const fs::path& out, const std::string& config_path) {
  const auto config = config_or_desk(config_path);
  msmt::export_corpus(out, msmt::sample_corpus(n, seed, config.resolutions), config.resolutions);
  std::cout << n << " items -> " << out.string() << '\n';
  return 0;
}

int cmd_info(const std::string& config_path) {
  const auto config = config_or_desk(config_path);
  const auto vocab = msmt::scene_vocabulary();
  const auto model = msmt::build_model(config, vocab.size());
  nlohmann::json j;
  j["preset"] = std::string(msmt::preset_name(config.preset));
  j["vocabulary_size"] = vocab.size();
  j["generator_parameters"] = msmt::count_parameters(model.generator_params());
  j["discriminator_parameters"] = msmt::count_parameters(model.discriminator_params());
  j["stages"] = config.resolutions;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msmt: multi-tailed, multi-head memory text-to-image GAN at desk scale"};
  app.require_subcommand(1);

  std::string config_path;
  fs::path out, ckpt;
  std::string caption;
  std::uint64_t seed = 0, extractor_seed = msmt::kDefaultExtractorSeed, eval_seed = 7;
  std::size_t n = 500, samples = 4;
  bool quiet = false, attention = false, verbose = false;

  auto* train = app.add_subcommand("train", "Train on the synthetic corpus");
  train->add_option("--config", config_path, "JSON config (desk preset when omitted)")->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output directory")->required();
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* generate = app.add_subcommand("generate", "Generate images for a caption");
  generate->add_option("--ckpt", ckpt, "Checkpoint file or training directory")->required();
  generate->add_option("--caption", caption, "Caption text")->required();
  generate->add_option("--seed", seed, "Noise seed");
  generate->add_option("--out", out, "Output directory")->required();
  generate->add_flag("--attention", attention, "Also dump key-addressing weights as CSV");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
  gradcheck->add_option("--seed", seed, "Parameter and probe seed");
  gradcheck->add_option("--config", config_path, "JSON config (desk preset when omitted)")->check(CLI::ExistingFile);
  gradcheck->add_option("--samples", samples, "Entries checked per tensor");
  gradcheck->add_flag("--verbose", verbose, "One line per audited tensor");

  auto* eval = app.add_subcommand("eval", "Frechet distance against rendered images");
  eval->add_option("--ckpt", ckpt, "Checkpoint file or training directory")->required();
  eval->add_option("--n", n, "Number of real and of generated images");
  eval->add_option("--out", out, "Report path (stdout when omitted)");
  eval->add_option("--extractor-seed", extractor_seed, "Feature extractor seed");
  eval->add_option("--eval-seed", eval_seed, "Caption and noise seed");

  auto* corpus = app.add_subcommand("export-corpus", "Write the synthetic corpus as PPM files");
  corpus->add_option("--n", n, "Items");
  corpus->add_option("--seed", seed, "Corpus seed");
  corpus->add_option("--out", out, "Output directory")->required();
  corpus->add_option("--config", config_path, "JSON config for the resolutions")->check(CLI::ExistingFile);

  auto* info = app.add_subcommand("info", "Print model sizes");
  info->add_option("--config", config_path, "JSON config (desk preset when omitted)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, out, quiet);
    if (*generate) return cmd_generate(ckpt, caption, seed, out, attention);
    if (*gradcheck) return cmd_gradcheck(config_path, seed, samples, verbose);
    if (*eval) return cmd_eval(ckpt, n, out, extractor_seed, eval_seed);
    if (*corpus) return cmd_export(n, seed, out, config_path);
    if (*info) return cmd_info(config_path);
  } catch (const std::exception& e) {
    std::cerr << "msmt: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
