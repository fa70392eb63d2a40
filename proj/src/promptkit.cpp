#include "xferbench/promptkit.hpp"

#include <algorithm>
#include <cctype>

#include "xferbench/error.hpp"

namespace xferbench {

namespace {

constexpr std::string_view kExplanationMarker = " explanation: ";

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

std::optional<Label> match_label(std::string_view token, std::span<const Label> vocab) {
  for (Label l : vocab) {
    if (iequals(token, to_string(l))) return l;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(SourceVariant variant) {
  switch (variant) {
    case SourceVariant::Standard: return "Standard";
    case SourceVariant::HypothesisOnly: return "HypothesisOnly";
    case SourceVariant::PremiseOnly: return "PremiseOnly";
    case SourceVariant::SecondPassWithLabel: return "SecondPassWithLabel";
  }
  return "?";
}

SourceVariant source_variant_from_string(std::string_view text) {
  for (auto v : {SourceVariant::Standard, SourceVariant::HypothesisOnly, SourceVariant::PremiseOnly,
                 SourceVariant::SecondPassWithLabel}) {
    if (iequals(text, to_string(v))) return v;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown source mode '" + std::string(text) + "'");
}

SourceMode::SourceMode(SourceVariant variant, std::optional<Label> injected_label)
    : variant_(variant), injected_label_(injected_label) {
  const bool wants_label = variant == SourceVariant::SecondPassWithLabel;
  if (wants_label && !injected_label_) {
    throw Error(ErrorCode::MissingLabel, "SecondPassWithLabel requires an injected label");
  }
  if (!wants_label && injected_label_) {
    throw Error(ErrorCode::InvalidConfig,
                "injected label only valid with SecondPassWithLabel, got " +
                    std::string(to_string(variant)));
  }
}

std::string serialize_source(const NLIExample& e, const SourceMode& mode) {
  switch (mode.variant()) {
    case SourceVariant::Standard:
      return "figurative hypothesis: " + e.hypothesis + "  premise: " + e.premise;
    case SourceVariant::HypothesisOnly:
      return "figurative hypothesis: " + e.hypothesis;
    case SourceVariant::PremiseOnly:
      return "premise: " + e.premise;
    case SourceVariant::SecondPassWithLabel:
      return label_prefixed(*mode.injected_label(), serialize_source(e, SourceMode::standard()));
  }
  return {};
}

std::string label_prefixed(Label label, std::string_view source) {
  std::string out(to_string(label));
  out += ' ';
  out += source;
  return out;
}

std::string serialize_target(const NLIExample& e, bool include_explanation) {
  std::string out(to_string(e.label));
  if (!include_explanation) return out;
  if (!e.explanation) {
    throw Error(ErrorCode::MissingExplanation, "target requested with explanation but none present");
  }
  out += kExplanationMarker;
  out += *e.explanation;
  return out;
}

ParsedOutput parse_prediction(std::string_view generated, std::span<const Label> vocab) {
  ParsedOutput out;
  if (!vocab.empty()) out.label = vocab.front();

  if (auto exact = match_label(generated, vocab)) {
    out.label = *exact;
    out.parse_ok = true;
    return out;
  }
  const std::size_t marker = generated.find(kExplanationMarker);
  if (marker != std::string_view::npos) {
    if (auto label = match_label(generated.substr(0, marker), vocab)) {
      out.label = *label;
      out.explanation = std::string(generated.substr(marker + kExplanationMarker.size()));
      out.parse_ok = true;
      return out;
    }
  }
  out.explanation = std::string(generated);
  return out;
}

}  // namespace xferbench
