#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xferbench {

enum class Label { Entailment, Contradiction };

enum class FigType { Metaphor, Simile, Idiom, CreativeParaphrase, Sarcasm };

inline constexpr std::array<Label, 2> kDefaultLabels{Label::Entailment, Label::Contradiction};

std::string_view to_string(Label label);
std::string_view to_string(FigType type);
std::optional<Label> label_from_string(std::string_view text);   // case-insensitive
std::optional<FigType> fig_type_from_string(std::string_view text);  // case-insensitive, tolerates spaces

struct NLIExample {
  std::string premise;
  std::string hypothesis;
  Label label = Label::Entailment;
  std::optional<std::string> explanation;
  std::optional<FigType> fig_type;
  std::string source_dataset;

  bool operator==(const NLIExample&) const = default;
};

// Describes which fields a dataset family carries and how raw label strings map onto Label.
struct DatasetSchema {
  std::string name;
  bool has_explanations = false;
  bool has_fig_types = false;
  std::vector<Label> label_vocabulary{Label::Entailment, Label::Contradiction};
  // Lower-cased raw label -> canonical label. Raw labels not listed here are rejected.
  std::map<std::string, Label> label_map{{"entailment", Label::Entailment},
                                         {"contradiction", Label::Contradiction}};

  static DatasetSchema figlang();
  static DatasetSchema esnli();
  static DatasetSchema impli();
  static DatasetSchema by_name(std::string_view name);

  bool operator==(const DatasetSchema&) const = default;
};

bool is_blank(std::string_view text);

// Immutable, validated collection of examples.
class Dataset {
 public:
  // Throws Error if any example violates the schema.
  Dataset(DatasetSchema schema, std::vector<NLIExample> examples);

  const DatasetSchema& schema() const noexcept { return schema_; }
  std::span<const NLIExample> examples() const noexcept { return examples_; }
  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  const NLIExample& operator[](std::size_t i) const { return examples_.at(i); }

  bool operator==(const Dataset&) const = default;

 private:
  DatasetSchema schema_;
  std::vector<NLIExample> examples_;
};

void validate_example(const NLIExample& example, const DatasetSchema& schema);

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema);
Dataset parse_dataset(std::string_view jsonl, const DatasetSchema& schema,
                      std::string_view source_id = "inline");

// Byte-stable JSONL: keys premise, hypothesis, label, explanation, fig_type; no extra whitespace.
std::string to_jsonl(const Dataset& dataset);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

Dataset truncate(const Dataset& dataset, std::size_t target_size);
// Order-preserving seeded sample of min(|d|, target_size) examples.
Dataset truncate_sampled(const Dataset& dataset, std::size_t target_size, std::uint64_t seed);

struct DevSplit {
  Dataset train;
  Dataset dev;
};

DevSplit split_dev(const Dataset& dataset, double dev_fraction, std::uint64_t seed);

std::map<FigType, Dataset> group_by_fig_type(const Dataset& dataset);

// Stable 64-bit identity of a dataset's serialized content.
std::uint64_t content_hash(const Dataset& dataset);

}  // namespace xferbench
