#pragma once

#include <span>
#include <string>
#include <vector>

#include "xferbench/corpus.hpp"
#include "xferbench/evalharness.hpp"
#include "xferbench/history.hpp"
#include "xferbench/model.hpp"
#include "xferbench/promptkit.hpp"
#include "xferbench/training_loop.hpp"

namespace xferbench {

class PhaseWeights {
 public:
  // w_expl is always 1 - w_label.
  explicit PhaseWeights(double w_label);

  static PhaseWeights label_heavy() { return PhaseWeights(0.9); }
  static PhaseWeights explanation_heavy() { return PhaseWeights(0.1); }
  static PhaseWeights label_only() { return PhaseWeights(1.0); }

  double w_label() const noexcept { return w_label_; }
  double w_expl() const noexcept { return w_expl_; }

 private:
  double w_label_;
  double w_expl_;
};

struct TwoPassBatchResult {
  Loss combined;
  double label_loss = 0.0;
  double expl_loss = 0.0;
  double combined_loss = 0.0;
  LabelSource label_source_used = LabelSource::Gold;
  Label conditioning_label = Label::Entailment;
  std::string second_pass_source;
};

// Pass 1: loss of "{gold label}" given the base source. Pass 2: loss of
// "{gold label} explanation: {gold explanation}" given the base source prefixed with the
// conditioning label (gold, or parsed from the model's own pass-1 generation). Both passes
// read the same parameter store; nothing is differentiated through the generated label.
TwoPassBatchResult forward_two_pass(const TextToTextModel& model, const NLIExample& example,
                                    LabelSource label_source, const PhaseWeights& weights,
                                    const GenerationConfig& generation = {},
                                    std::span<const Label> vocab = kDefaultLabels,
                                    SourceVariant base = SourceVariant::Standard);

// Pass-1-only step for explanation-free data; weights are (1, 0).
TwoPassBatchResult forward_label_only(const TextToTextModel& model, const NLIExample& example,
                                      SourceVariant base = SourceVariant::Standard);

Prediction predict_two_pass(const TextToTextModel& model, const NLIExample& example,
                            const GenerationConfig& cfg,
                            std::span<const Label> vocab = kDefaultLabels,
                            SourceVariant base = SourceVariant::Standard);

struct Phase {
  PhaseWeights weights;
  int epochs = 10;
};

// Explanation-bearing figurative stages: label-heavy then explanation-heavy, `epochs` each.
// Other explanation-bearing stages: one balanced phase. Explanation-free stages: one
// label-only phase.
std::vector<Phase> default_phase_plan(const DatasetSchema& schema, int epochs = 10);

// Same sequencing as run_sft; every step is a two-pass forward and phases run in order,
// each starting from the previous phase's dev-selected checkpoint with a fresh optimizer.
TrainingHistory run_hifeat(TextToTextModel& model, const std::vector<Stage>& stages,
                           const std::vector<std::vector<Phase>>& phase_plan,
                           const DataMap& data, const TrainConfig& cfg);

}  // namespace xferbench
