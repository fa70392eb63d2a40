#include "xferbench/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xferbench/error.hpp"
#include "xferbench/rng.hpp"

namespace xferbench {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string require_string(const nlohmann::json& record, const char* key, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    throw Error(ErrorCode::MissingField,
                "line " + std::to_string(line) + ": missing \"" + key + "\"");
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::MissingField,
                "line " + std::to_string(line) + ": \"" + key + "\" is not a string");
  }
  std::string value = it->get<std::string>();
  if (is_blank(value)) {
    throw Error(ErrorCode::MissingField,
                "line " + std::to_string(line) + ": \"" + key + "\" is empty");
  }
  return value;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> sorted_indices) {
  std::vector<NLIExample> out;
  out.reserve(sorted_indices.size());
  for (std::size_t i : sorted_indices) out.push_back(d[i]);
  return Dataset(d.schema(), std::move(out));
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Entailment: return "Entailment";
    case Label::Contradiction: return "Contradiction";
  }
  return "?";
}

std::string_view to_string(FigType type) {
  switch (type) {
    case FigType::Metaphor: return "Metaphor";
    case FigType::Simile: return "Simile";
    case FigType::Idiom: return "Idiom";
    case FigType::CreativeParaphrase: return "CreativeParaphrase";
    case FigType::Sarcasm: return "Sarcasm";
  }
  return "?";
}

std::optional<Label> label_from_string(std::string_view text) {
  const std::string key = lower(text);
  if (key == "entailment") return Label::Entailment;
  if (key == "contradiction") return Label::Contradiction;
  return std::nullopt;
}

std::optional<FigType> fig_type_from_string(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == ' ' || c == '_' || c == '-') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "metaphor") return FigType::Metaphor;
  if (key == "simile") return FigType::Simile;
  if (key == "idiom") return FigType::Idiom;
  if (key == "creativeparaphrase") return FigType::CreativeParaphrase;
  if (key == "sarcasm") return FigType::Sarcasm;
  return std::nullopt;
}

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

DatasetSchema DatasetSchema::figlang() {
  DatasetSchema s;
  s.name = "figlang";
  s.has_explanations = true;
  s.has_fig_types = true;
  return s;
}

DatasetSchema DatasetSchema::esnli() {
  DatasetSchema s;
  s.name = "esnli";
  s.has_explanations = true;
  return s;
}

DatasetSchema DatasetSchema::impli() {
  DatasetSchema s;
  s.name = "impli";
  s.label_map.emplace("non-entailment", Label::Contradiction);
  s.label_map.emplace("non_entailment", Label::Contradiction);
  return s;
}

DatasetSchema DatasetSchema::by_name(std::string_view name) {
  const std::string key = lower(name);
  if (key == "figlang") return figlang();
  if (key == "esnli") return esnli();
  if (key == "impli") return impli();
  throw Error(ErrorCode::InvalidConfig, "unknown schema '" + std::string(name) + "'");
}

void validate_example(const NLIExample& e, const DatasetSchema& schema) {
  if (is_blank(e.premise)) throw Error(ErrorCode::MissingField, "premise is empty");
  if (is_blank(e.hypothesis)) throw Error(ErrorCode::MissingField, "hypothesis is empty");
  if (std::find(schema.label_vocabulary.begin(), schema.label_vocabulary.end(), e.label) ==
      schema.label_vocabulary.end()) {
    throw Error(ErrorCode::UnknownLabel,
                "label " + std::string(to_string(e.label)) + " outside vocabulary");
  }
  if (schema.has_explanations && (!e.explanation || is_blank(*e.explanation))) {
    throw Error(ErrorCode::MissingField, "explanation required by schema " + schema.name);
  }
  if (schema.has_fig_types != e.fig_type.has_value()) {
    throw Error(ErrorCode::SchemaMismatch, "fig_type presence disagrees with schema " + schema.name);
  }
}

Dataset::Dataset(DatasetSchema schema, std::vector<NLIExample> examples)
    : schema_(std::move(schema)), examples_(std::move(examples)) {
  for (const auto& e : examples_) validate_example(e, schema_);
}

Dataset parse_dataset(std::string_view jsonl, const DatasetSchema& schema,
                      std::string_view source_id) {
  std::vector<NLIExample> examples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + err.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": not an object");
    }

    NLIExample e;
    e.source_dataset = std::string(source_id);
    e.premise = require_string(record, "premise", line_no);
    e.hypothesis = require_string(record, "hypothesis", line_no);
    const std::string raw_label = require_string(record, "label", line_no);
    auto mapped = schema.label_map.find(lower(raw_label));
    if (mapped == schema.label_map.end() ||
        std::find(schema.label_vocabulary.begin(), schema.label_vocabulary.end(),
                  mapped->second) == schema.label_vocabulary.end()) {
      throw Error(ErrorCode::UnknownLabel,
                  "line " + std::to_string(line_no) + ": label '" + raw_label + "'");
    }
    e.label = mapped->second;
    if (schema.has_explanations) e.explanation = require_string(record, "explanation", line_no);
    if (schema.has_fig_types) {
      const std::string raw_type = require_string(record, "fig_type", line_no);
      e.fig_type = fig_type_from_string(raw_type);
      if (!e.fig_type) {
        throw Error(ErrorCode::SchemaMismatch,
                    "line " + std::to_string(line_no) + ": unknown fig_type '" + raw_type + "'");
      }
    }
    examples.push_back(std::move(e));
  }
  if (examples.empty()) {
    throw Error(ErrorCode::EmptyFile, std::string(source_id) + " has no records");
  }
  return Dataset(schema, std::move(examples));
}

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), schema, path.stem().string());
}

std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& e : dataset.examples()) {
    nlohmann::ordered_json record;
    record["premise"] = e.premise;
    record["hypothesis"] = e.hypothesis;
    record["label"] = to_string(e.label);
    if (e.explanation) record["explanation"] = *e.explanation;
    if (e.fig_type) record["fig_type"] = to_string(*e.fig_type);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_jsonl(dataset);
}

Dataset truncate(const Dataset& dataset, std::size_t target_size) {
  const std::size_t n = std::min(dataset.size(), target_size);
  auto first = dataset.examples().subspan(0, n);
  return Dataset(dataset.schema(), std::vector<NLIExample>(first.begin(), first.end()));
}

Dataset truncate_sampled(const Dataset& dataset, std::size_t target_size, std::uint64_t seed) {
  if (target_size >= dataset.size()) return dataset;
  Rng rng(seed);
  auto perm = rng.permutation(dataset.size());
  perm.resize(target_size);
  std::sort(perm.begin(), perm.end());
  return subset(dataset, perm);
}

DevSplit split_dev(const Dataset& dataset, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "dev_fraction must lie in [0, 1)");
  }
  if (dev_fraction == 0.0) {
    return {dataset, Dataset(dataset.schema(), {})};
  }
  const std::size_t n = dataset.size();
  const auto n_dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(n)));
  if (n < 2 || n_dev == 0 || n_dev >= n) {
    throw Error(ErrorCode::DegenerateSplit, "dev fraction " + std::to_string(dev_fraction) +
                                                " of " + std::to_string(n) + " examples");
  }
  Rng rng(seed);
  auto perm = rng.permutation(n);
  std::vector<std::size_t> dev_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_dev), perm.end());
  std::sort(dev_idx.begin(), dev_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {subset(dataset, train_idx), subset(dataset, dev_idx)};
}

std::map<FigType, Dataset> group_by_fig_type(const Dataset& dataset) {
  if (!dataset.schema().has_fig_types) {
    throw Error(ErrorCode::SchemaMismatch,
                "schema " + dataset.schema().name + " has no fig_type annotations");
  }
  std::map<FigType, std::vector<NLIExample>> buckets;
  for (const auto& e : dataset.examples()) buckets[*e.fig_type].push_back(e);
  std::map<FigType, Dataset> out;
  for (auto& [type, examples] : buckets) {
    out.emplace(type, Dataset(dataset.schema(), std::move(examples)));
  }
  return out;
}

std::uint64_t content_hash(const Dataset& dataset) {
  Fnv1a h;
  h.update(dataset.schema().name);
  h.update("\n");
  h.update(to_jsonl(dataset));
  return h.digest();
}

}  // namespace xferbench
