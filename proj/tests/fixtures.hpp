#pragma once

// Synthetic corpora and helpers shared by the unit tests and the acceptance binary.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "xferbench/corpus.hpp"
#include "xferbench/rng.hpp"
#include "xferbench/toy_model.hpp"
#include "xferbench/vocabulary.hpp"

namespace fixtures {

using namespace xferbench;

inline NLIExample fig(std::string p, std::string h, Label l, std::string expl,
                      FigType t = FigType::Metaphor) {
  return NLIExample{std::move(p), std::move(h), l, std::move(expl), t, "fixture"};
}

inline std::vector<std::string> texts_of(const std::vector<const Dataset*>& sets) {
  std::vector<std::string> texts{"figurative hypothesis: premise: explanation:", "Entailment",
                                 "Contradiction"};
  for (const Dataset* d : sets) {
    for (const auto& e : d->examples()) {
      texts.push_back(e.premise);
      texts.push_back(e.hypothesis);
      if (e.explanation) texts.push_back(*e.explanation);
    }
  }
  return texts;
}

inline ToyModelConfig small_config(std::uint64_t seed = 7) {
  ToyModelConfig c;
  c.embed_dim = 16;
  c.encoder_dim = 32;
  c.decoder_dim = 48;
  c.max_positions = 32;
  c.seed = seed;
  return c;
}

// 16 figurative examples with distinct content words and short explanations.
inline Dataset memorization_set() {
  static const char* subjects[] = {"river", "lantern", "tiger", "glacier", "violin", "harbor",
                                   "orchard", "comet"};
  static const char* qualities[] = {"calm", "bright", "fierce", "cold", "sweet", "busy",
                                    "fertile", "swift"};
  static const FigType types[] = {FigType::Metaphor, FigType::Simile, FigType::Idiom,
                                  FigType::CreativeParaphrase};
  std::vector<NLIExample> out;
  for (int i = 0; i < 8; ++i) {
    const std::string s = subjects[i];
    const std::string q = qualities[i];
    const std::string other = qualities[(i + 3) % 8];
    out.push_back(fig("the " + s + " is " + q, "it was like a " + q + " " + s, Label::Entailment,
                      "a " + s + " can be " + q, types[i % 4]));
    out.push_back(fig("the " + s + " is " + q, "the " + s + " felt " + other,
                      Label::Contradiction, other + " is not " + q, types[(i + 1) % 4]));
  }
  return Dataset(DatasetSchema::figlang(), std::move(out));
}

// Cue tokens c0..c{n-1}; even cues signal entailment, odd cues contradiction. Every example
// carries one cue plus filler drawn from a shared pool.
struct TransferFixture {
  Dataset stage_a;   // eSNLI-schema corpus covering every cue
  Dataset b_train;   // FigLang-schema corpus covering the first half of the cues
  Dataset b_dev;     // FigLang-schema corpus covering the second half
};

inline NLIExample cue_example(Rng& rng, int cue, bool fig_schema) {
  static const char* fillers[] = {"sun", "moon", "stone", "cloud", "field", "road", "tree",
                                  "sea", "hill", "wind"};
  const Label l = cue % 2 == 0 ? Label::Entailment : Label::Contradiction;
  std::string p = std::string("she saw the ") + fillers[rng.below(10)] + " " + fillers[rng.below(10)];
  std::string h = "cue" + std::to_string(cue) + " " + fillers[rng.below(10)];
  std::string expl = l == Label::Entailment ? "the cue agrees" : "the cue clashes";
  NLIExample e{p, h, l, expl, std::nullopt, fig_schema ? "B" : "A"};
  if (fig_schema) e.fig_type = static_cast<FigType>(cue % 5);
  return e;
}

inline TransferFixture transfer_fixture(std::uint64_t seed, int n_cues = 12) {
  Rng rng(seed);
  std::vector<NLIExample> a, bt, bd;
  for (int rep = 0; rep < 4; ++rep) {
    for (int c = 0; c < n_cues; ++c) a.push_back(cue_example(rng, c, false));
  }
  for (int rep = 0; rep < 4; ++rep) {
    for (int c = 0; c < n_cues / 2; ++c) bt.push_back(cue_example(rng, c, true));
  }
  for (int rep = 0; rep < 2; ++rep) {
    for (int c = n_cues / 2; c < n_cues; ++c) bd.push_back(cue_example(rng, c, true));
  }
  return {Dataset(DatasetSchema::esnli(), std::move(a)),
          Dataset(DatasetSchema::figlang(), std::move(bt)),
          Dataset(DatasetSchema::figlang(), std::move(bd))};
}

// Label = XOR of a premise cue and a hypothesis cue, with filler tokens. Dev is balanced over
// the four cue combinations, so either side alone carries no label information.
struct XorFixture {
  Dataset train;
  Dataset dev;
};

inline XorFixture xor_fixture(std::uint64_t seed, int per_combo_train = 12, int per_combo_dev = 6) {
  static const char* fillers[] = {"gray", "warm", "old", "new", "loud", "soft", "far", "near"};
  Rng rng(seed);
  auto make = [&](int pb, int hb) {
    const Label l = pb == hb ? Label::Entailment : Label::Contradiction;
    std::string p = std::string(pb ? "pyes" : "pno") + " " + fillers[rng.below(8)] + " " +
                    fillers[rng.below(8)];
    std::string h = std::string(hb ? "hyes" : "hno") + " " + fillers[rng.below(8)];
    std::string expl = l == Label::Entailment ? "the signs agree" : "the signs differ";
    return NLIExample{p, h, l, expl, static_cast<FigType>((2 * pb + hb) % 5), "xor"};
  };
  std::vector<NLIExample> train, dev;
  for (int k = 0; k < per_combo_train; ++k) {
    for (int c = 0; c < 4; ++c) train.push_back(make(c / 2, c % 2));
  }
  for (int k = 0; k < per_combo_dev; ++k) {
    for (int c = 0; c < 4; ++c) dev.push_back(make(c / 2, c % 2));
  }
  return {Dataset(DatasetSchema::figlang(), std::move(train)),
          Dataset(DatasetSchema::figlang(), std::move(dev))};
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto dir = std::filesystem::temp_directory_path() /
             ("xferbench_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
