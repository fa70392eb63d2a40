#include "xferbench/training_loop.hpp"

#include <algorithm>

#include "xferbench/checkpoint.hpp"
#include "xferbench/error.hpp"
#include "xferbench/rng.hpp"

namespace xferbench {

std::string_view to_string(LabelSource source) {
  return source == LabelSource::Gold ? "Gold" : "Predicted";
}

LabelSource label_source_from_string(std::string_view text) {
  if (text == "Gold") return LabelSource::Gold;
  if (text == "Predicted") return LabelSource::Predicted;
  throw Error(ErrorCode::InvalidConfig, "unknown label source '" + std::string(text) + "'");
}

double TrainConfig::lr_for(const std::string& stage_id) const {
  auto it = stage_lr.find(stage_id);
  return it == stage_lr.end() ? lr : it->second;
}

const StageData& lookup_stage_data(const DataMap& data, const std::string& id) {
  auto it = data.find(id);
  if (it == data.end()) throw Error(ErrorCode::UnknownDataset, "no data for stage " + id);
  return it->second;
}

void run_phase(TextToTextModel& model, const PhaseSpec& spec, const StageData& data,
               const TrainConfig& cfg, const PhaseHooks& hooks, TrainingHistory& history) {
  if (spec.epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (data.train.empty()) {
    throw Error(ErrorCode::EmptyEvalSet, "stage " + spec.stage_id + " has no training data");
  }

  auto& store = model.parameters();
  const std::uint64_t start_fp = store.fingerprint();
  auto optimizer = make_optimizer(cfg.optimizer);
  Rng rng(derive_seed(cfg.seed, spec.stage_index, static_cast<std::uint64_t>(spec.phase)));
  const auto train = data.train.examples();
  const std::size_t n = train.size();
  std::vector<std::vector<double>> snapshots;
  std::size_t step = 0;

  EvalOptions eval_opts;
  eval_opts.regime = hooks.eval_regime;
  eval_opts.generation = cfg.generation;
  eval_opts.source_variant = cfg.source_variant;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    double loss_sum = 0.0;
    double label_sum = 0.0;
    double expl_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      Loss batch = Loss::constant(0.0, store.size());
      for (std::size_t i = begin; i < end; ++i) {
        ExampleLoss ex = hooks.example_loss(train[order[i]]);
        batch.add_scaled(ex.combined, scale);
        label_sum += ex.label_loss;
        expl_sum += ex.expl_loss;
        if (cfg.log_steps && spec.w_label) {
          history.append_step(StepRecord{spec.stage_index, spec.phase, epoch, step,
                                         ex.label_loss, ex.expl_loss, ex.combined.value(),
                                         *spec.w_label, 1.0 - *spec.w_label});
        }
        ++step;
      }
      train_step(model, batch, spec.lr, *optimizer);
      loss_sum += batch.value();
      ++n_batches;
    }

    EpochRecord rec;
    rec.stage_index = spec.stage_index;
    rec.stage_id = spec.stage_id;
    rec.phase = spec.phase;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n_batches);
    if (!data.dev.empty()) {
      const EvalReport report = evaluate(model, data.dev, eval_opts, cfg.scorers);
      rec.dev_acc_at_0 = report.acc_at_0;
      rec.dev_acc_at_50 = report.acc_at_50;
      rec.dev_acc_at_60 = report.acc_at_60;
      double dev_sum = 0.0;
      for (const auto& e : data.dev.examples()) dev_sum += hooks.dev_loss(e);
      rec.dev_loss = dev_sum / static_cast<double>(data.dev.size());
    }
    if (spec.w_label) {
      rec.label_loss = label_sum / static_cast<double>(n);
      rec.expl_loss = expl_sum / static_cast<double>(n);
      rec.w_label = *spec.w_label;
    }
    history.append(rec);
    snapshots.push_back(store.snapshot());
    if (cfg.checkpoint_dir) {
      const auto dir = *cfg.checkpoint_dir /
                       ("stage" + std::to_string(spec.stage_index) + "_" + spec.stage_id) /
                       ("phase" + std::to_string(spec.phase)) / ("epoch" + std::to_string(epoch));
      save_checkpoint(model, dir,
                      {{"stage_index", spec.stage_index}, {"stage_id", spec.stage_id},
                       {"phase", spec.phase}, {"epoch", epoch}});
    }
  }

  // Without a dev split there is nothing to select on; keep the final epoch.
  const int selected = data.dev.empty()
                           ? spec.epochs - 1
                           : select_checkpoint(history, spec.stage_id, spec.metric, spec.phase);
  store.restore(snapshots.at(static_cast<std::size_t>(selected)));
  history.append_summary(
      PhaseSummary{spec.stage_index, spec.stage_id, spec.phase, selected, start_fp, store.fingerprint()});
}

}  // namespace xferbench
