#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xferbench/corpus.hpp"
#include "xferbench/model.hpp"
#include "xferbench/promptkit.hpp"

namespace xferbench {

struct Prediction {
  Label label = Label::Entailment;
  std::string explanation;
  bool parse_ok = false;
  double expl_score = 0.0;
};

// Similarity between a generated and a reference explanation on a 0-100 scale.
// Implementations must return 100 for score(x, x) with non-empty x.
class ExplanationScorer {
 public:
  virtual ~ExplanationScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(std::string_view candidate, std::string_view reference) const = 0;
};

using ScorerList = std::vector<std::shared_ptr<const ExplanationScorer>>;

// 100 x unigram F1 over lower-cased whitespace tokens with trailing punctuation stripped.
std::shared_ptr<const ExplanationScorer> surrogate_scorer();

// Mean of the scorers, clamped to [0, 100]. Throws NoScorers / EmptyReference.
double explanation_score(std::string_view candidate, std::string_view reference,
                         const ScorerList& scorers);

// Fraction of items with a correct label and expl_score >= tau.
double acc_at(std::span<const Prediction> preds, std::span<const NLIExample> gold, double tau);

struct EvalReport {
  double acc_at_0 = 0.0;
  double acc_at_50 = 0.0;
  double acc_at_60 = 0.0;
  std::map<FigType, double> per_type_acc;
  std::size_t n_examples = 0;
  std::size_t n_parse_failures = 0;
  double mean_expl_score = 0.0;
  std::string eval_split_id;

  bool operator==(const EvalReport&) const = default;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);
std::string report_json(const EvalReport& r);  // canonical, byte-stable

enum class EvalRegime { SingleShot, TwoPass };

std::string_view to_string(EvalRegime regime);

struct EvalOptions {
  EvalRegime regime = EvalRegime::SingleShot;
  GenerationConfig generation;
  // Base prompt variant (Standard or one of the bias-ablation variants).
  SourceVariant source_variant = SourceVariant::Standard;
  double per_type_tau = 0.0;
};

// Serialises the source prompt for a base variant (Standard, HypothesisOnly, PremiseOnly).
std::string base_source(const NLIExample& e, SourceVariant variant);

std::vector<Prediction> predict(const TextToTextModel& model, const Dataset& dataset,
                                const EvalOptions& options);

// Fills expl_score for each prediction. Gold examples without an explanation score 0.
void score_predictions(std::span<Prediction> preds, std::span<const NLIExample> gold,
                       const ScorerList& scorers);

// Aggregates already-scored predictions.
EvalReport build_report(std::span<const Prediction> preds, const Dataset& gold,
                        double per_type_tau = 0.0);

EvalReport evaluate(const TextToTextModel& model, const Dataset& dataset,
                    const EvalOptions& options, const ScorerList& scorers);

std::string eval_split_id(const Dataset& dataset);

// Accuracy ratio rendered as a percentage with two decimals ("92.16").
std::string format_percent(double ratio);

// CSV with header "setting,Acc@0,Acc@50,Acc@60" and one row per (setting, report).
std::string accuracy_table_csv(
    const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string per_type_csv(const EvalReport& r);

}  // namespace xferbench
