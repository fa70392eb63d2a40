#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xferbench/evalharness.hpp"
#include "xferbench/history.hpp"
#include "xferbench/model.hpp"
#include "xferbench/toy_model.hpp"
#include "xferbench/training_loop.hpp"

namespace xferbench {

inline constexpr std::string_view kFrameworkVersion = XFERBENCH_VERSION;

enum class Regime { SFT, HiFeatMTL };
enum class TruncationMode { Prefix, Sample };

std::string_view to_string(Regime regime);
std::string_view to_string(TruncationMode mode);

struct DatasetSource {
  std::filesystem::path train;
  std::optional<std::filesystem::path> dev;
  std::string schema;
};

struct StageOverride {
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<SelectionMetric> selection_metric;
  // Two-pass regime: one w_label per phase, each phase running `phase_epochs` epochs.
  std::optional<std::vector<double>> phase_weights;
  std::optional<int> phase_epochs;
};

struct ExperimentConfig {
  Regime regime = Regime::SFT;
  std::vector<std::string> sequence{"FigLang"};
  SourceVariant source_mode = SourceVariant::Standard;
  std::uint64_t seed = 1;
  std::string model_backend = "toy";
  std::map<std::string, DatasetSource> datasets;
  double dev_fraction = 0.1;
  bool truncate_to_final = true;
  TruncationMode truncation = TruncationMode::Prefix;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  OptimizerKind optimizer = OptimizerKind::Adam;
  GenerationConfig generation;
  ToyModelConfig model;
  LabelSource label_source = LabelSource::Gold;
  int phase_epochs = 10;
  std::map<std::string, StageOverride> stage_overrides;
  bool save_epoch_checkpoints = true;
  // Display name used in comparison tables; not part of the config hash.
  std::string setting;

  // Unknown keys and malformed values are rejected. Relative dataset paths resolve
  // against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  void validate() const;
  std::string hash8() const;   // stable under key reordering
  std::string run_name() const;  // {regime}_{sequence}_{mode}_{seed}_{hash8}
};

const std::vector<std::vector<std::string>>& allowed_sequences();

// Top-level keys accepted in a config file.
const std::vector<std::string>& config_keys();

struct RunManifest {
  std::string setting;
  std::string status;  // "completed" or "failed"
  std::string error;
  std::string framework_version{kFrameworkVersion};
  double wall_clock_seconds = 0.0;
  nlohmann::json config;
  std::map<std::string, std::string> templates;
  TrainingHistory history;
  std::optional<EvalReport> final_report;
  std::vector<std::string> checkpoints;
  std::string run_dir;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::filesystem::path& path);
};

std::filesystem::path default_output_root();

// Executes one experiment in a fresh run directory under `out_root`. Config errors throw
// before any training; failures after that are recorded in the returned (and persisted)
// manifest with status "failed". Throws RunExists if the run directory is already present.
RunManifest run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_root);

struct AblationResult {
  std::vector<RunManifest> runs;  // Regular, Hyp-Only, Prem-Only
  std::string table_csv;
  std::filesystem::path table_path;
};

AblationResult run_bias_ablation(const ExperimentConfig& base_cfg,
                                 const std::filesystem::path& out_root);

struct Comparison {
  std::string accuracy_csv;
  std::string per_type_csv;
};

// "+5.63 (+7.8% rel)" for ratios 0.7250 -> 0.7813.
std::string format_delta(double base_ratio, double new_ratio);

Comparison emit_comparison(const std::vector<RunManifest>& manifests);

}  // namespace xferbench
