#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include <json.hpp>

#include "xferbench/model.hpp"
#include "xferbench/toy_model.hpp"

namespace xferbench {

// Checkpoint directory layout:
//   manifest.json     backend id, vocabulary hash, model config, caller metadata
//   params.bin        all tensors, little-endian float64, concatenated
//   params.index.json [{name, offset, shape, dtype}], offsets in elements
//   vocab.txt         one token per line (toy backend)
void save_checkpoint(const TextToTextModel& model, const std::filesystem::path& dir,
                     const nlohmann::json& metadata = nlohmann::json::object());

// Overwrites `model`'s parameters. Rejects backend, vocabulary-hash, or tensor-layout mismatch.
void load_checkpoint_into(TextToTextModel& model, const std::filesystem::path& dir);

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& dir);

// Rebuilds a toy model from a checkpoint. `expected_vocab_hash`, when given, must match the
// checkpoint's vocabulary (the corpus vocabulary the caller is about to evaluate with).
std::unique_ptr<ToyModel> load_toy_checkpoint(const std::filesystem::path& dir,
                                              std::optional<std::uint64_t> expected_vocab_hash = {});

}  // namespace xferbench
