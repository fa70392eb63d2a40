#include "xferbench/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "xferbench/checkpoint.hpp"
#include "xferbench/error.hpp"
#include "xferbench/hifeat_mtl.hpp"
#include "xferbench/promptkit.hpp"
#include "xferbench/rng.hpp"
#include "xferbench/sft_trainer.hpp"
#include "xferbench/vocabulary.hpp"

namespace xferbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Regime regime_from_string(std::string_view text) {
  if (text == "SFT") return Regime::SFT;
  if (text == "HiFeatMTL") return Regime::HiFeatMTL;
  throw Error(ErrorCode::InvalidConfig, "unknown regime '" + std::string(text) + "'");
}

TruncationMode truncation_from_string(std::string_view text) {
  if (text == "prefix") return TruncationMode::Prefix;
  if (text == "sample") return TruncationMode::Sample;
  throw Error(ErrorCode::InvalidConfig, "unknown truncation mode '" + std::string(text) + "'");
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

EpochRecord epoch_record_from_json(const json& j) {
  EpochRecord r;
  r.stage_index = j.at("stage_index").get<std::size_t>();
  r.stage_id = j.at("stage_id").get<std::string>();
  r.phase = j.at("phase").get<int>();
  r.epoch = j.at("epoch").get<int>();
  r.train_loss = j.at("train_loss").get<double>();
  r.dev_acc_at_0 = j.at("dev_acc_at_0").get<double>();
  r.dev_acc_at_50 = j.at("dev_acc_at_50").get<double>();
  r.dev_acc_at_60 = j.at("dev_acc_at_60").get<double>();
  r.dev_loss = j.at("dev_loss").get<double>();
  if (j.contains("label_loss")) r.label_loss = j["label_loss"].get<double>();
  if (j.contains("expl_loss")) r.expl_loss = j["expl_loss"].get<double>();
  if (j.contains("w_label")) r.w_label = j["w_label"].get<double>();
  return r;
}

std::string short_variant(SourceVariant v) {
  switch (v) {
    case SourceVariant::Standard: return "Standard";
    case SourceVariant::HypothesisOnly: return "HypOnly";
    case SourceVariant::PremiseOnly: return "PremOnly";
    case SourceVariant::SecondPassWithLabel: return "SecondPass";
  }
  return "?";
}

// Texts the vocabulary is built from: every field of every training example plus the fixed
// template and label tokens.
std::vector<std::string> vocabulary_texts(const DataMap& data) {
  std::vector<std::string> texts{std::string(kSourceTemplate), std::string(kTargetTemplate)};
  for (Label l : kDefaultLabels) texts.emplace_back(to_string(l));
  for (const auto& [id, d] : data) {
    for (const auto& e : d.train.examples()) {
      texts.push_back(e.premise);
      texts.push_back(e.hypothesis);
      if (e.explanation) texts.push_back(*e.explanation);
    }
  }
  return texts;
}

struct PreparedData {
  DataMap data;
  std::vector<Stage> stages;
  std::vector<std::vector<Phase>> phase_plan;
};

PreparedData prepare(const ExperimentConfig& cfg) {
  PreparedData out;
  const std::string& final_id = cfg.sequence.back();
  std::map<std::string, DevSplit> splits;
  for (const auto& id : cfg.sequence) {
    const DatasetSource& src = cfg.datasets.at(id);
    const DatasetSchema schema = DatasetSchema::by_name(src.schema);
    Dataset full = load_dataset(src.train, schema);
    if (src.dev) {
      splits.emplace(id, DevSplit{std::move(full), load_dataset(*src.dev, schema)});
    } else {
      splits.emplace(id, split_dev(full, cfg.dev_fraction, derive_seed(cfg.seed, fnv1a(id))));
    }
  }
  const std::size_t target = splits.at(final_id).train.size();
  for (auto& [id, split] : splits) {
    Dataset train = split.train;
    if (id != final_id && cfg.truncate_to_final) {
      train = cfg.truncation == TruncationMode::Prefix
                  ? truncate(train, target)
                  : truncate_sampled(train, target, derive_seed(cfg.seed, fnv1a(id), 1));
    }
    out.data.emplace(id, StageData{std::move(train), split.dev});
  }

  for (const auto& id : cfg.sequence) {
    const DatasetSchema& schema = out.data.at(id).train.schema();
    const auto ov_it = cfg.stage_overrides.find(id);
    const StageOverride ov = ov_it == cfg.stage_overrides.end() ? StageOverride{} : ov_it->second;
    Stage stage;
    stage.dataset_id = id;
    stage.include_explanation = schema.has_explanations;
    stage.epochs = ov.epochs.value_or(schema.has_explanations ? 10 : 3);
    stage.selection_metric = ov.selection_metric.value_or(
        schema.has_explanations ? SelectionMetric::AccAt60 : SelectionMetric::AccAt0);
    out.stages.push_back(stage);

    const int phase_epochs = ov.phase_epochs.value_or(cfg.phase_epochs);
    if (ov.phase_weights) {
      std::vector<Phase> phases;
      for (double w : *ov.phase_weights) phases.push_back(Phase{PhaseWeights(w), phase_epochs});
      out.phase_plan.push_back(std::move(phases));
    } else {
      out.phase_plan.push_back(default_phase_plan(schema, phase_epochs));
    }
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::string_view to_string(Regime regime) { return regime == Regime::SFT ? "SFT" : "HiFeatMTL"; }

std::string_view to_string(TruncationMode mode) {
  return mode == TruncationMode::Prefix ? "prefix" : "sample";
}

const std::vector<std::vector<std::string>>& allowed_sequences() {
  static const std::vector<std::vector<std::string>> seqs{
      {"FigLang"},
      {"eSNLI", "FigLang"},
      {"IMPLI", "FigLang"},
      {"eSNLI", "IMPLI", "FigLang"},
      {"IMPLI", "eSNLI", "FigLang"},
  };
  return seqs;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "regime", "sequence", "source_mode", "seed", "model_backend", "datasets",
      "dev_fraction", "truncate_to_final", "truncation", "lr", "batch_size",
      "optimizer", "num_beams", "max_output_tokens", "model", "label_source",
      "phase_epochs", "stage_overrides", "save_epoch_checkpoints", "setting"};
  return keys;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  reject_unknown_keys(j, std::set<std::string>(config_keys().begin(), config_keys().end()), "config");
  ExperimentConfig c;
  try {
    if (j.contains("regime")) c.regime = regime_from_string(j["regime"].get<std::string>());
    read_opt(j, "sequence", c.sequence);
    if (j.contains("source_mode")) {
      c.source_mode = source_variant_from_string(j["source_mode"].get<std::string>());
    }
    read_opt(j, "seed", c.seed);
    read_opt(j, "model_backend", c.model_backend);
    if (j.contains("datasets")) {
      reject_unknown_keys(j["datasets"], {"FigLang", "eSNLI", "IMPLI"}, "datasets");
      for (const auto& [id, d] : j["datasets"].items()) {
        reject_unknown_keys(d, {"train", "dev", "schema"}, "datasets." + id);
        DatasetSource src;
        auto resolve = [&](const std::string& p) {
          fs::path path(p);
          return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
        };
        src.train = resolve(d.at("train").get<std::string>());
        if (d.contains("dev")) src.dev = resolve(d["dev"].get<std::string>());
        src.schema = d.value("schema", id == "FigLang" ? "figlang" : id == "eSNLI" ? "esnli" : "impli");
        c.datasets.emplace(id, std::move(src));
      }
    }
    read_opt(j, "dev_fraction", c.dev_fraction);
    read_opt(j, "truncate_to_final", c.truncate_to_final);
    if (j.contains("truncation")) c.truncation = truncation_from_string(j["truncation"].get<std::string>());
    read_opt(j, "lr", c.lr);
    read_opt(j, "batch_size", c.batch_size);
    if (j.contains("optimizer")) c.optimizer = optimizer_kind_from_string(j["optimizer"].get<std::string>());
    read_opt(j, "num_beams", c.generation.num_beams);
    read_opt(j, "max_output_tokens", c.generation.max_output_tokens);
    c.generation.seed = c.seed;
    if (j.contains("model")) {
      reject_unknown_keys(j["model"], {"embed_dim", "encoder_dim", "decoder_dim", "max_positions"},
                          "model");
      c.model = j["model"].get<ToyModelConfig>();
    }
    c.model.seed = c.seed;
    if (j.contains("label_source")) {
      c.label_source = label_source_from_string(j["label_source"].get<std::string>());
    }
    read_opt(j, "phase_epochs", c.phase_epochs);
    if (j.contains("stage_overrides")) {
      reject_unknown_keys(j["stage_overrides"], {"FigLang", "eSNLI", "IMPLI"}, "stage_overrides");
      for (const auto& [id, o] : j["stage_overrides"].items()) {
        reject_unknown_keys(o, {"epochs", "lr", "selection_metric", "phase_weights", "phase_epochs"},
                            "stage_overrides." + id);
        StageOverride ov;
        if (o.contains("epochs")) ov.epochs = o["epochs"].get<int>();
        if (o.contains("lr")) ov.lr = o["lr"].get<double>();
        if (o.contains("selection_metric")) {
          ov.selection_metric = selection_metric_from_string(o["selection_metric"].get<std::string>());
        }
        if (o.contains("phase_weights")) ov.phase_weights = o["phase_weights"].get<std::vector<double>>();
        if (o.contains("phase_epochs")) ov.phase_epochs = o["phase_epochs"].get<int>();
        c.stage_overrides.emplace(id, std::move(ov));
      }
    }
    read_opt(j, "save_epoch_checkpoints", c.save_epoch_checkpoints);
    read_opt(j, "setting", c.setting);
  } catch (const json::exception& err) {
    throw Error(ErrorCode::InvalidConfig, err.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& err) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + err.what());
  }
  return from_json(j, path.parent_path());
}

json ExperimentConfig::to_json() const {
  json j;
  j["regime"] = to_string(regime);
  j["sequence"] = sequence;
  j["source_mode"] = to_string(source_mode);
  j["seed"] = seed;
  j["model_backend"] = model_backend;
  json ds = json::object();
  for (const auto& [id, src] : datasets) {
    json d{{"train", src.train.generic_string()}, {"schema", src.schema}};
    if (src.dev) d["dev"] = src.dev->generic_string();
    ds[id] = d;
  }
  j["datasets"] = ds;
  j["dev_fraction"] = dev_fraction;
  j["truncate_to_final"] = truncate_to_final;
  j["truncation"] = to_string(truncation);
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["optimizer"] = to_string(optimizer);
  j["num_beams"] = generation.num_beams;
  j["max_output_tokens"] = generation.max_output_tokens;
  json m = model;
  m.erase("seed");
  j["model"] = m;
  j["label_source"] = to_string(label_source);
  j["phase_epochs"] = phase_epochs;
  json ov = json::object();
  for (const auto& [id, o] : stage_overrides) {
    json e = json::object();
    if (o.epochs) e["epochs"] = *o.epochs;
    if (o.lr) e["lr"] = *o.lr;
    if (o.selection_metric) e["selection_metric"] = to_string(*o.selection_metric);
    if (o.phase_weights) e["phase_weights"] = *o.phase_weights;
    if (o.phase_epochs) e["phase_epochs"] = *o.phase_epochs;
    ov[id] = e;
  }
  j["stage_overrides"] = ov;
  j["save_epoch_checkpoints"] = save_epoch_checkpoints;
  if (!setting.empty()) j["setting"] = setting;
  return j;
}

void ExperimentConfig::validate() const {
  const auto& seqs = allowed_sequences();
  if (std::find(seqs.begin(), seqs.end(), sequence) == seqs.end()) {
    throw Error(ErrorCode::InvalidConfig, "sequence [" + join(sequence, ", ") +
                                              "] is not one of the supported training sequences");
  }
  if (source_mode == SourceVariant::SecondPassWithLabel) {
    throw Error(ErrorCode::InvalidConfig, "source_mode must be Standard, HypothesisOnly or PremiseOnly");
  }
  if (model_backend != "toy") {
    throw Error(ErrorCode::InvalidConfig, "unknown model backend '" + model_backend + "'");
  }
  for (const auto& id : sequence) {
    auto it = datasets.find(id);
    if (it == datasets.end()) throw Error(ErrorCode::UnknownDataset, "no dataset entry for " + id);
    DatasetSchema::by_name(it->second.schema);
  }
  if (!DatasetSchema::by_name(datasets.at(sequence.back()).schema).has_fig_types) {
    throw Error(ErrorCode::InvalidConfig, "the final stage must use the figlang schema");
  }
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "dev_fraction must lie in [0, 1)");
  }
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be positive");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (phase_epochs < 1) throw Error(ErrorCode::InvalidConfig, "phase_epochs must be >= 1");
  generation.validate();
  model.validate();
  for (const auto& [id, o] : stage_overrides) {
    if (std::find(sequence.begin(), sequence.end(), id) == sequence.end()) {
      throw Error(ErrorCode::UnknownStage, "override for " + id + " which is not in the sequence");
    }
    if (o.epochs && *o.epochs < 1) throw Error(ErrorCode::InvalidConfig, id + ": epochs < 1");
    if (o.phase_epochs && *o.phase_epochs < 1) {
      throw Error(ErrorCode::InvalidConfig, id + ": phase_epochs < 1");
    }
    if (o.lr && !(*o.lr > 0.0)) throw Error(ErrorCode::InvalidConfig, id + ": lr must be positive");
    if (regime == Regime::HiFeatMTL && o.selection_metric == SelectionMetric::DevLoss) {
      throw Error(ErrorCode::InvalidConfig, id + ": HiFeatMTL stages cannot select on DevLoss");
    }
    if (o.phase_weights) {
      if (o.phase_weights->empty()) throw Error(ErrorCode::InvalidConfig, id + ": empty phase_weights");
      for (double w : *o.phase_weights) PhaseWeights check(w);
    }
  }
}

std::string ExperimentConfig::hash8() const {
  json j = to_json();
  j.erase("setting");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return std::string(buf, 8);
}

std::string ExperimentConfig::run_name() const {
  return std::string(to_string(regime)) + "_" + join(sequence, "-") + "_" +
         short_variant(source_mode) + "_" + std::to_string(seed) + "_" + hash8();
}

json RunManifest::to_json() const {
  nlohmann::ordered_json o;
  o["setting"] = setting;
  o["status"] = status;
  o["error"] = error;
  o["framework_version"] = framework_version;
  o["wall_clock_seconds"] = wall_clock_seconds;
  o["config"] = nlohmann::ordered_json::parse(config.dump());
  nlohmann::ordered_json t;
  for (const auto& [k, v] : templates) t[k] = v;
  o["templates"] = t;
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& r : history.records()) hist.push_back(nlohmann::ordered_json::parse(record_json(r)));
  o["history"] = hist;
  nlohmann::ordered_json summaries = nlohmann::ordered_json::array();
  for (const auto& s : history.summaries()) {
    summaries.push_back({{"stage_index", s.stage_index},
                         {"stage_id", s.stage_id},
                         {"phase", s.phase},
                         {"selected_epoch", s.selected_epoch}});
  }
  o["selected_checkpoints"] = summaries;
  o["final_report"] = final_report ? nlohmann::ordered_json::parse(report_json(*final_report)) : nlohmann::ordered_json(nullptr);
  o["checkpoints"] = checkpoints;
  o["run_dir"] = run_dir;
  return json::parse(o.dump());
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.setting = j.value("setting", "");
    m.status = j.value("status", "");
    m.error = j.value("error", "");
    m.framework_version = j.value("framework_version", "");
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    m.config = j.value("config", json::object());
    m.templates = j.value("templates", std::map<std::string, std::string>{});
    for (const auto& r : j.value("history", json::array())) m.history.append(epoch_record_from_json(r));
    if (j.contains("final_report") && !j["final_report"].is_null()) {
      m.final_report = j["final_report"].get<EvalReport>();
    }
    m.checkpoints = j.value("checkpoints", std::vector<std::string>{});
    m.run_dir = j.value("run_dir", "");
  } catch (const json::exception& err) {
    throw Error(ErrorCode::Parse, std::string("manifest: ") + err.what());
  }
  return m;
}

RunManifest RunManifest::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& err) {
    throw Error(ErrorCode::Parse, path.string() + ": " + err.what());
  }
  return from_json(j);
}

fs::path default_output_root() {
  if (const char* env = std::getenv("XFERBENCH_OUT"); env && *env) return fs::path(env);
  return fs::path("runs");
}

RunManifest run_experiment(const ExperimentConfig& cfg, const fs::path& out_root) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  const fs::path run_dir = out_root / cfg.run_name();
  if (fs::exists(run_dir)) {
    throw Error(ErrorCode::RunExists, run_dir.string() + " already exists; runs are never overwritten");
  }
  fs::create_directories(run_dir);

  RunManifest manifest;
  manifest.setting = cfg.setting.empty() ? cfg.run_name() : cfg.setting;
  manifest.config = cfg.to_json();
  manifest.templates = {{"source", std::string(kSourceTemplate)},
                        {"target", std::string(kTargetTemplate)},
                        {"second_pass", std::string(kSecondPassTemplate)}};
  manifest.run_dir = run_dir.generic_string();
  write_text(run_dir / "config.json", manifest.config.dump(2) + "\n");

  try {
    PreparedData prepared = prepare(cfg);
    const Vocabulary vocab = Vocabulary::build(vocabulary_texts(prepared.data));
    vocab.save(run_dir / "vocab.txt");
    ToyModelConfig model_cfg = cfg.model;
    model_cfg.seed = cfg.seed;
    ToyModel model(vocab, model_cfg);

    TrainConfig tc;
    tc.lr = cfg.lr;
    tc.batch_size = cfg.batch_size;
    tc.optimizer = cfg.optimizer;
    tc.seed = cfg.seed;
    tc.generation = cfg.generation;
    tc.source_variant = cfg.source_mode;
    tc.label_source = cfg.label_source;
    for (const auto& [id, o] : cfg.stage_overrides) {
      if (o.lr) tc.stage_lr[id] = *o.lr;
    }
    if (cfg.save_epoch_checkpoints) tc.checkpoint_dir = run_dir / "checkpoints";

    manifest.history = cfg.regime == Regime::SFT
                           ? run_sft(model, prepared.stages, prepared.data, tc)
                           : run_hifeat(model, prepared.stages, prepared.phase_plan, prepared.data, tc);

    const std::string& final_id = cfg.sequence.back();
    const Dataset& eval_split = prepared.data.at(final_id).dev;
    write_dataset(eval_split, run_dir / "eval_split.jsonl");

    EvalOptions eval_opts;
    eval_opts.regime = cfg.regime == Regime::SFT ? EvalRegime::SingleShot : EvalRegime::TwoPass;
    eval_opts.generation = cfg.generation;
    eval_opts.source_variant = cfg.source_mode;
    const EvalReport report = evaluate(model, eval_split, eval_opts, tc.scorers);
    manifest.final_report = report;

    const fs::path final_dir = run_dir / "final";
    save_checkpoint(model, final_dir,
                    {{"eval_regime", to_string(eval_opts.regime)},
                     {"source_mode", to_string(cfg.source_mode)},
                     {"generation", cfg.generation},
                     {"schema", cfg.datasets.at(final_id).schema}});

    write_text(run_dir / "history.jsonl", manifest.history.to_jsonl());
    if (cfg.regime == Regime::HiFeatMTL) {
      write_text(run_dir / "steps.jsonl", manifest.history.steps_jsonl());
    }
    write_text(run_dir / "report.json", report_json(report));
    write_text(run_dir / "report.csv", accuracy_table_csv({{manifest.setting, report}}));
    write_text(run_dir / "per_type.csv", per_type_csv(report));

    if (tc.checkpoint_dir) {
      for (const auto& r : manifest.history.records()) {
        manifest.checkpoints.push_back(
            (fs::path("checkpoints") / ("stage" + std::to_string(r.stage_index) + "_" + r.stage_id) /
             ("phase" + std::to_string(r.phase)) / ("epoch" + std::to_string(r.epoch)))
                .generic_string());
      }
    }
    manifest.checkpoints.push_back("final");
    manifest.status = "completed";
  } catch (const std::exception& err) {
    manifest.status = "failed";
    manifest.error = err.what();
  }

  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text(run_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

AblationResult run_bias_ablation(const ExperimentConfig& base_cfg, const fs::path& out_root) {
  base_cfg.validate();
  const std::pair<SourceVariant, const char*> settings[] = {
      {SourceVariant::Standard, "Regular"},
      {SourceVariant::HypothesisOnly, "Hyp-Only"},
      {SourceVariant::PremiseOnly, "Prem-Only"},
  };
  AblationResult result;
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& [variant, name] : settings) {
    ExperimentConfig cfg = base_cfg;
    cfg.source_mode = variant;
    cfg.setting = name;
    RunManifest m = run_experiment(cfg, out_root);
    if (m.status != "completed" || !m.final_report) {
      throw Error(ErrorCode::InvalidConfig, std::string(name) + " run failed: " + m.error);
    }
    rows.emplace_back(name, *m.final_report);
    result.runs.push_back(std::move(m));
  }
  result.table_csv = accuracy_table_csv(rows);
  ExperimentConfig base = base_cfg;
  base.source_mode = SourceVariant::Standard;
  result.table_path = out_root / ("ablation_" + base.run_name() + ".csv");
  write_text(result.table_path, result.table_csv);
  return result;
}

std::string format_delta(double base_ratio, double new_ratio) {
  const double abs_pct = (new_ratio - base_ratio) * 100.0;
  char buf[64];
  if (base_ratio == 0.0) {
    std::snprintf(buf, sizeof buf, "%+.2f (n/a rel)", abs_pct + 0.0);
  } else {
    const double rel = (new_ratio - base_ratio) / base_ratio * 100.0;
    std::snprintf(buf, sizeof buf, "%+.2f (%+.1f%% rel)", abs_pct + 0.0, rel + 0.0);
  }
  return buf;
}

Comparison emit_comparison(const std::vector<RunManifest>& manifests) {
  if (manifests.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "comparison needs at least two manifests");
  }
  for (const auto& m : manifests) {
    if (!m.final_report) {
      throw Error(ErrorCode::InvalidConfig, "manifest " + m.setting + " has no final report");
    }
  }
  const std::string& split = manifests.front().final_report->eval_split_id;
  for (const auto& m : manifests) {
    if (m.final_report->eval_split_id != split) {
      throw Error(ErrorCode::MismatchedEvalSplit,
                  m.setting + " was evaluated on split " + m.final_report->eval_split_id +
                      ", expected " + split);
    }
  }

  Comparison out;
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& m : manifests) rows.emplace_back(m.setting, *m.final_report);
  out.accuracy_csv = accuracy_table_csv(rows);

  const EvalReport& base = *manifests.front().final_report;
  std::string header = "type," + manifests.front().setting;
  for (std::size_t i = 1; i < manifests.size(); ++i) {
    header += "," + manifests[i].setting + ",delta(" + manifests[i].setting + ")";
  }
  out.per_type_csv = header + "\n";
  for (const auto& [type, base_acc] : base.per_type_acc) {
    std::string row = std::string(to_string(type)) + "," + format_percent(base_acc);
    for (std::size_t i = 1; i < manifests.size(); ++i) {
      const auto& other = manifests[i].final_report->per_type_acc;
      auto it = other.find(type);
      if (it == other.end()) {
        row += ",,";
        continue;
      }
      row += "," + format_percent(it->second) + "," + format_delta(base_acc, it->second);
    }
    out.per_type_csv += row + "\n";
  }
  return out;
}

}  // namespace xferbench
