#include "xferbench/sft_trainer.hpp"

#include <set>

#include "xferbench/error.hpp"
#include "xferbench/promptkit.hpp"

namespace xferbench {

void validate_stages(const std::vector<Stage>& stages, const DataMap& data) {
  if (stages.empty()) throw Error(ErrorCode::InvalidConfig, "no stages configured");
  std::set<std::string> seen;
  for (const auto& s : stages) {
    if (!seen.insert(s.dataset_id).second) {
      throw Error(ErrorCode::InvalidConfig, "stage " + s.dataset_id + " appears twice");
    }
    if (s.epochs < 1) throw Error(ErrorCode::InvalidConfig, "stage " + s.dataset_id + ": epochs < 1");
    const auto& d = lookup_stage_data(data, s.dataset_id);
    if (d.train.schema().has_explanations != s.include_explanation) {
      throw Error(ErrorCode::InvalidConfig,
                  "stage " + s.dataset_id +
                      ": include_explanation must match whether the schema carries explanations");
    }
  }
}

TrainingHistory run_sft(TextToTextModel& model, const std::vector<Stage>& stages,
                        const DataMap& data, const TrainConfig& cfg) {
  validate_stages(stages, data);
  TrainingHistory history;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const Stage& stage = stages[k];
    const StageData& d = lookup_stage_data(data, stage.dataset_id);

    PhaseSpec spec;
    spec.stage_index = k;
    spec.stage_id = stage.dataset_id;
    spec.epochs = stage.epochs;
    spec.lr = cfg.lr_for(stage.dataset_id);
    spec.metric = stage.selection_metric;

    const bool with_expl = stage.include_explanation;
    const SourceVariant variant = cfg.source_variant;
    PhaseHooks hooks;
    hooks.eval_regime = EvalRegime::SingleShot;
    hooks.example_loss = [&model, with_expl, variant](const NLIExample& e) {
      Loss loss = model.compute_loss(base_source(e, variant), serialize_target(e, with_expl));
      const double v = loss.value();
      return ExampleLoss{std::move(loss), v, 0.0};
    };
    hooks.dev_loss = [&model, with_expl, variant](const NLIExample& e) {
      return model.loss_value(base_source(e, variant), serialize_target(e, with_expl));
    };
    run_phase(model, spec, d, cfg, hooks, history);
  }
  return history;
}

}  // namespace xferbench
