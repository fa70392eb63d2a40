#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xferbench {

enum class SelectionMetric { AccAt0, AccAt60, DevLoss };

std::string_view to_string(SelectionMetric metric);
SelectionMetric selection_metric_from_string(std::string_view text);

struct Stage {
  std::string dataset_id;
  int epochs = 1;
  bool include_explanation = true;
  SelectionMetric selection_metric = SelectionMetric::AccAt60;
};

struct EpochRecord {
  std::size_t stage_index = 0;
  std::string stage_id;
  int phase = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double dev_acc_at_0 = 0.0;
  double dev_acc_at_50 = 0.0;
  double dev_acc_at_60 = 0.0;
  double dev_loss = 0.0;
  // Two-pass trainer only.
  std::optional<double> label_loss;
  std::optional<double> expl_loss;
  std::optional<double> w_label;
};

struct StepRecord {
  std::size_t stage_index = 0;
  int phase = 0;
  int epoch = 0;
  std::size_t step = 0;
  double label_loss = 0.0;
  double expl_loss = 0.0;
  double combined_loss = 0.0;
  double w_label = 1.0;
  double w_expl = 0.0;
};

struct PhaseSummary {
  std::size_t stage_index = 0;
  std::string stage_id;
  int phase = 0;
  int selected_epoch = 0;
  std::uint64_t start_fingerprint = 0;
  std::uint64_t selected_fingerprint = 0;
};

class TrainingHistory {
 public:
  // Records must arrive ordered by (stage index, phase, epoch).
  void append(EpochRecord record);
  void append_step(const StepRecord& step) { steps_.push_back(step); }
  void append_summary(const PhaseSummary& summary) { summaries_.push_back(summary); }

  const std::vector<EpochRecord>& records() const noexcept { return records_; }
  const std::vector<StepRecord>& steps() const noexcept { return steps_; }
  const std::vector<PhaseSummary>& summaries() const noexcept { return summaries_; }

  // One JSON object per epoch record; byte-stable for equal histories.
  std::string to_jsonl() const;
  std::string steps_jsonl() const;

 private:
  std::vector<EpochRecord> records_;
  std::vector<StepRecord> steps_;
  std::vector<PhaseSummary> summaries_;
};

std::string record_json(const EpochRecord& r);

// Epoch with the best metric value among the records of (stage_id, phase). Accuracy metrics
// take the argmax, DevLoss the argmin; ties go to the earliest epoch. Throws UnknownStage.
int select_checkpoint(const TrainingHistory& history, std::string_view stage_id,
                      SelectionMetric metric, int phase = 0);

}  // namespace xferbench
