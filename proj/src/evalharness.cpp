#include "xferbench/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "xferbench/error.hpp"
#include "xferbench/hifeat_mtl.hpp"
#include "xferbench/rng.hpp"
#include "xferbench/vocabulary.hpp"

namespace xferbench {

namespace {

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto raw : split_whitespace(text)) {
    std::string tok;
    tok.reserve(raw.size());
    for (char c : raw) tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    while (!tok.empty() && std::ispunct(static_cast<unsigned char>(tok.back()))) tok.pop_back();
    if (!tok.empty()) out.push_back(std::move(tok));
  }
  return out;
}

class SurrogateScorer final : public ExplanationScorer {
 public:
  std::string name() const override { return "surrogate-unigram-f1"; }

  double score(std::string_view candidate, std::string_view reference) const override {
    const auto cand = normalize_tokens(candidate);
    const auto ref = normalize_tokens(reference);
    if (cand.empty() && ref.empty()) return candidate == reference ? 100.0 : 0.0;
    if (cand.empty() || ref.empty()) return 0.0;
    std::unordered_map<std::string, int> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    int overlap = 0;
    for (const auto& t : cand) {
      auto it = ref_counts.find(t);
      if (it != ref_counts.end() && it->second > 0) {
        --it->second;
        ++overlap;
      }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 100.0 * 2.0 * precision * recall / (precision + recall);
  }
};

}  // namespace

std::shared_ptr<const ExplanationScorer> surrogate_scorer() {
  return std::make_shared<SurrogateScorer>();
}

double explanation_score(std::string_view candidate, std::string_view reference,
                         const ScorerList& scorers) {
  if (scorers.empty()) throw Error(ErrorCode::NoScorers, "explanation score needs a scorer");
  if (is_blank(reference)) throw Error(ErrorCode::EmptyReference, "reference explanation is empty");
  double sum = 0.0;
  for (const auto& s : scorers) sum += s->score(candidate, reference);
  return std::clamp(sum / static_cast<double>(scorers.size()), 0.0, 100.0);
}

double acc_at(std::span<const Prediction> preds, std::span<const NLIExample> gold, double tau) {
  if (preds.size() != gold.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(gold.size()) + " gold examples");
  }
  if (preds.empty()) throw Error(ErrorCode::EmptyEvalSet, "no examples to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label == gold[i].label && preds[i].expl_score >= tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::ordered_json per_type = nlohmann::ordered_json::object();
  for (const auto& [type, acc] : r.per_type_acc) per_type[std::string(to_string(type))] = acc;
  nlohmann::ordered_json o;
  o["acc_at_0"] = r.acc_at_0;
  o["acc_at_50"] = r.acc_at_50;
  o["acc_at_60"] = r.acc_at_60;
  o["per_type_acc"] = per_type;
  o["n_examples"] = r.n_examples;
  o["n_parse_failures"] = r.n_parse_failures;
  o["mean_expl_score"] = r.mean_expl_score;
  o["eval_split_id"] = r.eval_split_id;
  j = nlohmann::json::parse(o.dump());
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  r.acc_at_0 = j.at("acc_at_0").get<double>();
  r.acc_at_50 = j.at("acc_at_50").get<double>();
  r.acc_at_60 = j.at("acc_at_60").get<double>();
  r.per_type_acc.clear();
  const nlohmann::json per_type = j.value("per_type_acc", nlohmann::json::object());
  for (const auto& [key, value] : per_type.items()) {
    auto type = fig_type_from_string(key);
    if (!type) throw Error(ErrorCode::Parse, "unknown fig type in report: " + key);
    r.per_type_acc[*type] = value.get<double>();
  }
  r.n_examples = j.value("n_examples", std::size_t{0});
  r.n_parse_failures = j.value("n_parse_failures", std::size_t{0});
  r.mean_expl_score = j.value("mean_expl_score", 0.0);
  r.eval_split_id = j.value("eval_split_id", "");
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json per_type = nlohmann::ordered_json::object();
  for (const auto& [type, acc] : r.per_type_acc) per_type[std::string(to_string(type))] = acc;
  nlohmann::ordered_json o;
  o["acc_at_0"] = r.acc_at_0;
  o["acc_at_50"] = r.acc_at_50;
  o["acc_at_60"] = r.acc_at_60;
  o["per_type_acc"] = per_type;
  o["n_examples"] = r.n_examples;
  o["n_parse_failures"] = r.n_parse_failures;
  o["mean_expl_score"] = r.mean_expl_score;
  o["eval_split_id"] = r.eval_split_id;
  return o.dump(2) + "\n";
}

std::string_view to_string(EvalRegime regime) {
  return regime == EvalRegime::SingleShot ? "SingleShot" : "TwoPass";
}

std::string base_source(const NLIExample& e, SourceVariant variant) {
  if (variant == SourceVariant::SecondPassWithLabel) {
    throw Error(ErrorCode::InvalidConfig, "second-pass prompts are built by the two-pass pipeline");
  }
  return serialize_source(e, SourceMode(variant));
}

std::vector<Prediction> predict(const TextToTextModel& model, const Dataset& dataset,
                                const EvalOptions& options) {
  const auto& vocab = dataset.schema().label_vocabulary;
  std::vector<Prediction> out;
  out.reserve(dataset.size());
  for (const auto& e : dataset.examples()) {
    if (options.regime == EvalRegime::TwoPass) {
      out.push_back(predict_two_pass(model, e, options.generation, vocab, options.source_variant));
      continue;
    }
    const std::string generated = model.generate(base_source(e, options.source_variant),
                                                 options.generation);
    const ParsedOutput parsed = parse_prediction(generated, vocab);
    out.push_back(Prediction{parsed.label, parsed.explanation, parsed.parse_ok, 0.0});
  }
  return out;
}

void score_predictions(std::span<Prediction> preds, std::span<const NLIExample> gold,
                       const ScorerList& scorers) {
  if (preds.size() != gold.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and gold differ in length");
  }
  if (scorers.empty()) throw Error(ErrorCode::NoScorers, "explanation score needs a scorer");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& ref = gold[i].explanation;
    preds[i].expl_score =
        (ref && !is_blank(*ref)) ? explanation_score(preds[i].explanation, *ref, scorers) : 0.0;
  }
}

EvalReport build_report(std::span<const Prediction> preds, const Dataset& gold,
                        double per_type_tau) {
  const auto examples = gold.examples();
  EvalReport r;
  r.acc_at_0 = acc_at(preds, examples, 0.0);
  r.acc_at_50 = acc_at(preds, examples, 50.0);
  r.acc_at_60 = acc_at(preds, examples, 60.0);
  r.n_examples = preds.size();
  double score_sum = 0.0;
  for (const auto& p : preds) {
    if (!p.parse_ok) ++r.n_parse_failures;
    score_sum += p.expl_score;
  }
  r.mean_expl_score = score_sum / static_cast<double>(preds.size());
  if (gold.schema().has_fig_types) {
    std::map<FigType, std::pair<std::size_t, std::size_t>> tally;  // hits, total
    for (std::size_t i = 0; i < preds.size(); ++i) {
      auto& [hits, total] = tally[*examples[i].fig_type];
      ++total;
      if (preds[i].label == examples[i].label && preds[i].expl_score >= per_type_tau) ++hits;
    }
    for (const auto& [type, ht] : tally) {
      r.per_type_acc[type] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    }
  }
  r.eval_split_id = eval_split_id(gold);
  return r;
}

EvalReport evaluate(const TextToTextModel& model, const Dataset& dataset,
                    const EvalOptions& options, const ScorerList& scorers) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyEvalSet, "evaluation dataset is empty");
  auto preds = predict(model, dataset, options);
  score_predictions(preds, dataset.examples(), scorers);
  return build_report(preds, dataset, options.per_type_tau);
}

std::string eval_split_id(const Dataset& dataset) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(content_hash(dataset)));
  return buf;
}

std::string format_percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", ratio * 100.0);
  return buf;
}

std::string accuracy_table_csv(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::string out = "setting,Acc@0,Acc@50,Acc@60\n";
  for (const auto& [setting, r] : rows) {
    out += setting + "," + format_percent(r.acc_at_0) + "," + format_percent(r.acc_at_50) + "," +
           format_percent(r.acc_at_60) + "\n";
  }
  return out;
}

std::string per_type_csv(const EvalReport& r) {
  std::string out = "type,accuracy\n";
  for (const auto& [type, acc] : r.per_type_acc) {
    out += std::string(to_string(type)) + "," + format_percent(acc) + "\n";
  }
  return out;
}

}  // namespace xferbench
