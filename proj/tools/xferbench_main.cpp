// xferbench command line: run, ablate, compare, evaluate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xferbench/checkpoint.hpp"
#include "xferbench/error.hpp"
#include "xferbench/evalharness.hpp"
#include "xferbench/runner.hpp"

namespace fs = std::filesystem;
using namespace xferbench;

namespace {

void print_report(const std::string& setting, const EvalReport& r) {
  std::cout << accuracy_table_csv({{setting, r}});
  std::cout << "n_examples=" << r.n_examples << " parse_failures=" << r.n_parse_failures
            << " eval_split=" << r.eval_split_id << "\n";
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.generation.seed = *seed;
    cfg.model.seed = *seed;
  }
  const fs::path root = out ? fs::path(*out) : default_output_root();
  RunManifest m = run_experiment(cfg, root);
  std::cout << "run_dir: " << m.run_dir << "\n";
  if (m.status != "completed") {
    std::cerr << "run failed: " << m.error << "\n";
    return 1;
  }
  print_report(m.setting, *m.final_report);
  return 0;
}

int cmd_ablate(const std::string& config_path, std::optional<std::string> out) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  const fs::path root = out ? fs::path(*out) : default_output_root();
  AblationResult res = run_bias_ablation(cfg, root);
  std::cout << res.table_csv;
  std::cout << "table: " << res.table_path.string() << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, std::optional<std::string> per_type_out) {
  std::vector<RunManifest> manifests;
  for (const auto& p : paths) {
    fs::path path(p);
    if (fs::is_directory(path)) path /= "manifest.json";
    manifests.push_back(RunManifest::load(path));
  }
  Comparison c = emit_comparison(manifests);
  std::cout << c.accuracy_csv;
  if (per_type_out) {
    std::ofstream f(*per_type_out, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + *per_type_out);
    f << c.per_type_csv;
  } else {
    std::cout << "\n" << c.per_type_csv;
  }
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data,
                 std::optional<std::string> schema_name) {
  const nlohmann::json manifest = read_checkpoint_manifest(checkpoint);
  const nlohmann::json meta = manifest.value("metadata", nlohmann::json::object());
  auto model = load_toy_checkpoint(checkpoint);

  const std::string schema = schema_name ? *schema_name : meta.value("schema", std::string("figlang"));
  const Dataset dataset = load_dataset(data, DatasetSchema::by_name(schema));

  EvalOptions opts;
  if (meta.contains("eval_regime")) {
    opts.regime = meta["eval_regime"].get<std::string>() == to_string(EvalRegime::TwoPass)
                      ? EvalRegime::TwoPass
                      : EvalRegime::SingleShot;
  }
  if (meta.contains("source_mode")) {
    opts.source_variant = source_variant_from_string(meta["source_mode"].get<std::string>());
  }
  if (meta.contains("generation")) opts.generation = meta["generation"].get<GenerationConfig>();

  const EvalReport r = evaluate(*model, dataset, opts, {surrogate_scorer()});
  std::cout << report_json(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xferbench: sequential and two-pass multi-task training experiments"};
  app.set_version_flag("--version", std::string(kFrameworkVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "train and evaluate one configured experiment");
  run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out, "artifact root (default: $XFERBENCH_OUT or ./runs)");

  std::string ablate_config;
  std::optional<std::string> ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Regular / Hyp-Only / Prem-Only runs of one config");
  ablate->add_option("--config", ablate_config, "experiment config (JSON)")->required()->check(CLI::ExistingPath);
  ablate->add_option("--out", ablate_out, "artifact root");

  std::vector<std::string> manifests;
  std::optional<std::string> per_type_out;
  auto* compare = app.add_subcommand("compare", "accuracy and per-type delta tables");
  compare->add_option("manifests", manifests, "manifest.json files or run directories")
      ->required()
      ->expected(2, -1);
  compare->add_option("--per-type-out", per_type_out, "write the per-type CSV here");

  std::string checkpoint, data;
  std::optional<std::string> schema;
  auto* eval = app.add_subcommand("evaluate", "score a saved checkpoint on a JSONL file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--schema", schema, "figlang | esnli | impli");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, out);
    if (*ablate) return cmd_ablate(ablate_config, ablate_out);
    if (*compare) return cmd_compare(manifests, per_type_out);
    if (*eval) return cmd_evaluate(checkpoint, data, schema);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
