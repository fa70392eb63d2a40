#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "xferbench/corpus.hpp"
#include "xferbench/evalharness.hpp"
#include "xferbench/history.hpp"
#include "xferbench/model.hpp"

namespace xferbench {

struct StageData {
  Dataset train;
  Dataset dev;
};

using DataMap = std::map<std::string, StageData>;

enum class LabelSource { Gold, Predicted };

std::string_view to_string(LabelSource source);
LabelSource label_source_from_string(std::string_view text);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 8;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 0;
  GenerationConfig generation;
  SourceVariant source_variant = SourceVariant::Standard;
  ScorerList scorers{surrogate_scorer()};
  // Per-stage learning-rate overrides keyed by dataset id.
  std::map<std::string, double> stage_lr;
  // Two-pass trainer: conditioning label for the second pass during training.
  LabelSource label_source = LabelSource::Gold;
  // When set, every epoch's parameters are written under this directory.
  std::optional<std::filesystem::path> checkpoint_dir;
  bool log_steps = true;

  double lr_for(const std::string& stage_id) const;
};

// Per-example loss of one training step. label/expl components are informational for the
// single-pass trainer.
struct ExampleLoss {
  Loss combined;
  double label_loss = 0.0;
  double expl_loss = 0.0;
};

struct PhaseSpec {
  std::size_t stage_index = 0;
  std::string stage_id;
  int phase = 0;
  int epochs = 1;
  double lr = 1e-3;
  SelectionMetric metric = SelectionMetric::AccAt60;
  // Set by the two-pass trainer; recorded in history and step logs.
  std::optional<double> w_label;
};

struct PhaseHooks {
  std::function<ExampleLoss(const NLIExample&)> example_loss;
  std::function<double(const NLIExample&)> dev_loss;
  EvalRegime eval_regime = EvalRegime::SingleShot;
};

// Trains one phase for a fixed epoch budget, evaluating on dev after each epoch, then
// restores the epoch selected by spec.metric. Optimizer state starts fresh.
void run_phase(TextToTextModel& model, const PhaseSpec& spec, const StageData& data,
               const TrainConfig& cfg, const PhaseHooks& hooks, TrainingHistory& history);

const StageData& lookup_stage_data(const DataMap& data, const std::string& id);

}  // namespace xferbench
