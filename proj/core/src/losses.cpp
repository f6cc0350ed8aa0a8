// SPDX-License-Identifier: Apache-2.0
#include "msmt/losses.hpp"

#include "msmt/ops.hpp"
#include "msmt/text.hpp"

namespace msmt {

Tensor safe_log(const Tensor& x) { return log(clamp(x, kLogEpsilon, 1.0)); }

Tensor head_summary(const Tensor& head_output) {
  if (head_output.rank() != 3) throw ShapeError("head output must be [s, s, C], got " + to_string(head_output.shape()));
  const std::size_t pixels = head_output.dim(0) * head_output.dim(1);
  Tensor flat = reshape(head_output, {pixels, head_output.dim(2)});
  return mul(sum(flat, 0), 1.0 / static_cast<double>(pixels));
}

Tensor redundancy_loss(const std::vector<Tensor>& head_outputs) {
  if (head_outputs.empty()) throw ShapeError("redundancy_loss: no heads");
  for (const auto& o : head_outputs) {
    if (o.shape() != head_outputs.front().shape()) throw ShapeError("redundancy_loss: head outputs differ in shape");
  }
  std::vector<Tensor> f;
  f.reserve(head_outputs.size());
  for (const auto& o : head_outputs) f.push_back(head_summary(o));
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j) total = add(total, cosine_similarity(f[i], f[j]));
  return total;
}

Tensor generator_adversarial_loss(const StageScores& fake) {
  return mul(add(mean(safe_log(fake.unconditional)), mean(safe_log(fake.conditional))), -0.5);
}

Tensor discriminator_loss(const StageScores& real, const StageScores& fake) {
  if (real.unconditional.numel() != fake.unconditional.numel() ||
      real.conditional.numel() != fake.conditional.numel()) {
    throw ShapeError("discriminator_loss: real and fake batches differ in size");
  }
  auto half = [](const Tensor& r, const Tensor& f) {
    return mul(add(mean(safe_log(r)), mean(safe_log(rsub(1.0, f)))), -0.5);
  };
  return add(half(real.unconditional, fake.unconditional), half(real.conditional, fake.conditional));
}

GeneratorLoss generator_loss(const std::vector<StageScores>& fake, const std::vector<SampleTerms>& samples,
                             const LossWeights& weights) {
  if (fake.empty()) throw ShapeError("generator_loss: no stages");
  if (samples.empty()) throw ShapeError("generator_loss: empty batch");
  GeneratorLoss out;
  const double inv_batch = 1.0 / static_cast<double>(samples.size());

  Tensor ca = Tensor::scalar(0.0);
  for (const auto& s : samples) ca = add(ca, kl_loss(s.mu, s.logvar));
  out.ca = mul(ca, inv_batch);
  Tensor total = mul(out.ca, weights.ca);

  const std::size_t refinement_stages = samples.front().head_outputs.size();
  for (std::size_t k = 0; k < refinement_stages; ++k) {
    Tensor red = Tensor::scalar(0.0);
    for (const auto& s : samples) {
      if (s.head_outputs.size() != refinement_stages) throw ShapeError("generator_loss: ragged stage count");
      red = add(red, redundancy_loss(s.head_outputs[k]));
    }
    red = mul(red, inv_batch);
    out.redundancy.push_back(red);
    if (weights.redundancy != 0.0) total = add(total, mul(red, weights.redundancy));
  }

  for (const auto& stage : fake) {
    Tensor adv = generator_adversarial_loss(stage);
    out.adversarial.push_back(adv);
    total = add(total, adv);
  }
  out.total = total;
  return out;
}

}  // namespace msmt
