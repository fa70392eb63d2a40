#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "xferbench/corpus.hpp"

namespace xferbench {

// Frozen wire templates. These are emitted verbatim into every run manifest.
inline constexpr std::string_view kSourceTemplate =
    "figurative hypothesis: <hypothesis>  premise: <premise>";
inline constexpr std::string_view kTargetTemplate = "<label> explanation: <explanation>";
inline constexpr std::string_view kSecondPassTemplate =
    "<label> figurative hypothesis: <hypothesis>  premise: <premise>";

enum class SourceVariant { Standard, HypothesisOnly, PremiseOnly, SecondPassWithLabel };

std::string_view to_string(SourceVariant variant);
SourceVariant source_variant_from_string(std::string_view text);

class SourceMode {
 public:
  // Throws MissingLabel for SecondPassWithLabel without a label, InvalidConfig for a label
  // attached to any other variant.
  explicit SourceMode(SourceVariant variant, std::optional<Label> injected_label = std::nullopt);

  static SourceMode standard() { return SourceMode(SourceVariant::Standard); }
  static SourceMode second_pass(Label label) {
    return SourceMode(SourceVariant::SecondPassWithLabel, label);
  }

  SourceVariant variant() const noexcept { return variant_; }
  const std::optional<Label>& injected_label() const noexcept { return injected_label_; }

 private:
  SourceVariant variant_;
  std::optional<Label> injected_label_;
};

std::string serialize_source(const NLIExample& example, const SourceMode& mode);

// "{label} " + source. The second pass of the two-pass pipeline uses this on top of whatever
// base variant the experiment runs with.
std::string label_prefixed(Label label, std::string_view source);

std::string serialize_target(const NLIExample& example, bool include_explanation);

struct ParsedOutput {
  Label label = Label::Entailment;
  std::string explanation;
  bool parse_ok = false;

  bool operator==(const ParsedOutput&) const = default;
};

// Total: never throws. Falls back to the first vocabulary entry with parse_ok=false.
ParsedOutput parse_prediction(std::string_view generated, std::span<const Label> vocab);

}  // namespace xferbench
