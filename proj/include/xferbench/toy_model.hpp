#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xferbench/model.hpp"
#include "xferbench/vocabulary.hpp"

namespace xferbench {

struct ToyModelConfig {
  int embed_dim = 32;
  int encoder_dim = 64;
  int decoder_dim = 128;
  int max_positions = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const ToyModelConfig& cfg);
void from_json(const nlohmann::json& j, ToyModelConfig& cfg);

// Small encoder-decoder used as the owned reference backend.
//
// Encoder: per-token tanh layer over source token plus position embeddings, mean-pooled, then a second tanh
// layer producing the context vector c.
// Decoder: at output position t, z_t = tanh(Wc c + Wy emb(y_{t-1}) + pos_t + b), followed by
// a softmax projection. The decoder has no recurrence, so conditioning on (c, previous token,
// position) is the whole state; that is enough to memorise and to transfer token-level cues.
class ToyModel final : public TextToTextModel {
 public:
  static constexpr std::string_view kBackendId = "toy-encdec-v1";

  ToyModel(Vocabulary vocab, ToyModelConfig cfg);

  std::string backend_id() const override { return std::string(kBackendId); }
  ParameterStore& parameters() override { return params_; }
  const ParameterStore& parameters() const override { return params_; }

  Loss compute_loss(std::string_view source, std::string_view target) const override;
  double loss_value(std::string_view source, std::string_view target) const override;
  std::string generate(std::string_view source, const GenerationConfig& cfg) const override;

  nlohmann::json config() const override;
  std::uint64_t vocabulary_hash() const override { return vocab_.hash(); }

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const ToyModelConfig& model_config() const noexcept { return cfg_; }

 private:
  struct Offsets {
    std::size_t enc_embed, enc_pos, enc_w1, enc_b1, enc_w2, enc_b2;
    std::size_t dec_embed, dec_wc, dec_wy, dec_pos, dec_b, out_w, out_b;
  };
  struct Encoded;

  Encoded encode_source(std::string_view source) const;
  // Fills z (decoder hidden) and logits for one output position.
  void decoder_step(const Encoded& enc, int prev_token, int position, std::vector<double>& z,
                    std::vector<double>& logits) const;
  double forward_backward(std::string_view source, std::string_view target,
                          std::vector<double>* grad) const;
  const double* at(std::size_t offset) const { return params_.flat().data() + offset; }
  std::size_t source_position(std::size_t i) const {
    return std::min(i, static_cast<std::size_t>(cfg_.max_positions - 1));
  }

  Vocabulary vocab_;
  ToyModelConfig cfg_;
  ParameterStore params_;
  Offsets off_{};
};

}  // namespace xferbench
