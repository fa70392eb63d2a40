#include "xferbench/hifeat_mtl.hpp"

#include "xferbench/error.hpp"
#include "xferbench/sft_trainer.hpp"

namespace xferbench {

PhaseWeights::PhaseWeights(double w_label) : w_label_(w_label), w_expl_(1.0 - w_label) {
  if (!(w_label >= 0.0 && w_label <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "w_label must lie in [0, 1]");
  }
}

TwoPassBatchResult forward_two_pass(const TextToTextModel& model, const NLIExample& e,
                                    LabelSource label_source, const PhaseWeights& weights,
                                    const GenerationConfig& generation,
                                    std::span<const Label> vocab, SourceVariant base) {
  if (!e.explanation) {
    throw Error(ErrorCode::MissingExplanation, "two-pass step needs a gold explanation");
  }
  const std::string source = base_source(e, base);
  Loss label_loss = model.compute_loss(source, serialize_target(e, false));

  Label conditioning = e.label;
  if (label_source == LabelSource::Predicted) {
    conditioning = parse_prediction(model.generate(source, generation), vocab).label;
  }
  std::string second_source = label_prefixed(conditioning, source);
  Loss expl_loss = model.compute_loss(second_source, serialize_target(e, true));

  TwoPassBatchResult out{Loss::weighted_sum(label_loss, weights.w_label(), expl_loss,
                                            weights.w_expl()),
                         label_loss.value(),
                         expl_loss.value(),
                         0.0,
                         label_source,
                         conditioning,
                         std::move(second_source)};
  out.combined_loss = out.combined.value();
  return out;
}

TwoPassBatchResult forward_label_only(const TextToTextModel& model, const NLIExample& e,
                                      SourceVariant base) {
  Loss label_loss = model.compute_loss(base_source(e, base), serialize_target(e, false));
  const double v = label_loss.value();
  return TwoPassBatchResult{std::move(label_loss), v, 0.0, v, LabelSource::Gold, e.label, {}};
}

Prediction predict_two_pass(const TextToTextModel& model, const NLIExample& e,
                            const GenerationConfig& cfg, std::span<const Label> vocab,
                            SourceVariant base) {
  const std::string source = base_source(e, base);
  const ParsedOutput first = parse_prediction(model.generate(source, cfg), vocab);
  const ParsedOutput second =
      parse_prediction(model.generate(label_prefixed(first.label, source), cfg), vocab);
  return Prediction{first.label, second.explanation, first.parse_ok && second.parse_ok, 0.0};
}

std::vector<Phase> default_phase_plan(const DatasetSchema& schema, int epochs) {
  if (!schema.has_explanations) return {Phase{PhaseWeights::label_only(), epochs}};
  if (schema.has_fig_types) {
    return {Phase{PhaseWeights::label_heavy(), epochs},
            Phase{PhaseWeights::explanation_heavy(), epochs}};
  }
  return {Phase{PhaseWeights(0.5), epochs}};
}

TrainingHistory run_hifeat(TextToTextModel& model, const std::vector<Stage>& stages,
                           const std::vector<std::vector<Phase>>& phase_plan,
                           const DataMap& data, const TrainConfig& cfg) {
  validate_stages(stages, data);
  if (phase_plan.size() != stages.size()) {
    throw Error(ErrorCode::InvalidConfig, "phase plan must have one entry per stage");
  }
  TrainingHistory history;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const Stage& stage = stages[k];
    const StageData& d = lookup_stage_data(data, stage.dataset_id);
    if (stage.selection_metric == SelectionMetric::DevLoss) {
      throw Error(ErrorCode::InvalidConfig,
                  "two-pass stages select on dev accuracy, not dev loss (" + stage.dataset_id + ")");
    }
    if (phase_plan[k].empty()) {
      throw Error(ErrorCode::InvalidConfig, "stage " + stage.dataset_id + " has no phases");
    }
    const bool label_only = !stage.include_explanation;
    const auto vocab = d.train.schema().label_vocabulary;

    for (std::size_t p = 0; p < phase_plan[k].size(); ++p) {
      const Phase& phase = phase_plan[k][p];
      const PhaseWeights weights = label_only ? PhaseWeights::label_only() : phase.weights;

      PhaseSpec spec;
      spec.stage_index = k;
      spec.stage_id = stage.dataset_id;
      spec.phase = static_cast<int>(p);
      spec.epochs = phase.epochs;
      spec.lr = cfg.lr_for(stage.dataset_id);
      spec.metric = stage.selection_metric;
      spec.w_label = weights.w_label();

      const SourceVariant variant = cfg.source_variant;
      const LabelSource label_source = cfg.label_source;
      const GenerationConfig gen = cfg.generation;
      PhaseHooks hooks;
      hooks.eval_regime = EvalRegime::TwoPass;
      hooks.example_loss = [&model, weights, label_only, variant, label_source, gen,
                            vocab](const NLIExample& e) {
        TwoPassBatchResult r = label_only
                                   ? forward_label_only(model, e, variant)
                                   : forward_two_pass(model, e, label_source, weights, gen, vocab,
                                                      variant);
        return ExampleLoss{std::move(r.combined), r.label_loss, r.expl_loss};
      };
      hooks.dev_loss = [&model, weights, label_only, variant](const NLIExample& e) {
        const std::string source = base_source(e, variant);
        const double l1 = model.loss_value(source, serialize_target(e, false));
        if (label_only) return l1;
        const double l2 =
            model.loss_value(label_prefixed(e.label, source), serialize_target(e, true));
        return weights.w_label() * l1 + weights.w_expl() * l2;
      };
      run_phase(model, spec, d, cfg, hooks, history);
    }
  }
  return history;
}

}  // namespace xferbench
