#include "xferbench/history.hpp"

#include <tuple>

#include <json.hpp>

#include "xferbench/error.hpp"

namespace xferbench {

std::string_view to_string(SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::AccAt0: return "AccAt0";
    case SelectionMetric::AccAt60: return "AccAt60";
    case SelectionMetric::DevLoss: return "DevLoss";
  }
  return "?";
}

SelectionMetric selection_metric_from_string(std::string_view text) {
  if (text == "AccAt0") return SelectionMetric::AccAt0;
  if (text == "AccAt60") return SelectionMetric::AccAt60;
  if (text == "DevLoss") return SelectionMetric::DevLoss;
  throw Error(ErrorCode::InvalidConfig, "unknown selection metric '" + std::string(text) + "'");
}

void TrainingHistory::append(EpochRecord record) {
  if (!records_.empty()) {
    const auto& last = records_.back();
    if (std::tie(record.stage_index, record.phase, record.epoch) <=
        std::tie(last.stage_index, last.phase, last.epoch)) {
      throw Error(ErrorCode::InvalidConfig, "history records must be appended in order");
    }
  }
  records_.push_back(std::move(record));
}

std::string record_json(const EpochRecord& r) {
  nlohmann::ordered_json o;
  o["stage_index"] = r.stage_index;
  o["stage_id"] = r.stage_id;
  o["phase"] = r.phase;
  o["epoch"] = r.epoch;
  o["train_loss"] = r.train_loss;
  o["dev_acc_at_0"] = r.dev_acc_at_0;
  o["dev_acc_at_50"] = r.dev_acc_at_50;
  o["dev_acc_at_60"] = r.dev_acc_at_60;
  o["dev_loss"] = r.dev_loss;
  if (r.label_loss) o["label_loss"] = *r.label_loss;
  if (r.expl_loss) o["expl_loss"] = *r.expl_loss;
  if (r.w_label) o["w_label"] = *r.w_label;
  return o.dump();
}

std::string TrainingHistory::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) out += record_json(r) + "\n";
  return out;
}

std::string TrainingHistory::steps_jsonl() const {
  std::string out;
  for (const auto& s : steps_) {
    nlohmann::ordered_json o;
    o["stage_index"] = s.stage_index;
    o["phase"] = s.phase;
    o["epoch"] = s.epoch;
    o["step"] = s.step;
    o["label_loss"] = s.label_loss;
    o["expl_loss"] = s.expl_loss;
    o["combined_loss"] = s.combined_loss;
    o["w_label"] = s.w_label;
    o["w_expl"] = s.w_expl;
    out += o.dump() + "\n";
  }
  return out;
}

int select_checkpoint(const TrainingHistory& history, std::string_view stage_id,
                      SelectionMetric metric, int phase) {
  std::optional<int> best_epoch;
  double best = 0.0;
  for (const auto& r : history.records()) {
    if (r.stage_id != stage_id || r.phase != phase) continue;
    double value = 0.0;
    switch (metric) {
      case SelectionMetric::AccAt0: value = r.dev_acc_at_0; break;
      case SelectionMetric::AccAt60: value = r.dev_acc_at_60; break;
      case SelectionMetric::DevLoss: value = -r.dev_loss; break;
    }
    if (!best_epoch || value > best) {
      best_epoch = r.epoch;
      best = value;
    }
  }
  if (!best_epoch) {
    throw Error(ErrorCode::UnknownStage, "no history for stage " + std::string(stage_id));
  }
  return *best_epoch;
}

}  // namespace xferbench
