#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace xferbench {

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Named real-valued tensors over a single flat buffer. Every handle returned by get()
// aliases the same storage, so all passes of a training step read and write one copy.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Must be called before any handle is taken; handles are invalidated by later additions.
  std::span<double> add(std::string name, std::vector<std::size_t> shape);

  std::span<double> get(std::string_view name);
  std::span<const double> get(std::string_view name) const;
  const TensorInfo& info(std::string_view name) const;

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::vector<double> snapshot() const { return data_; }
  void restore(std::span<const double> values);
  std::uint64_t fingerprint() const;

 private:
  std::vector<double> data_;
  std::vector<TensorInfo> tensors_;
};

// A scalar loss together with its dense gradient over a model's parameter store.
class Loss {
 public:
  Loss(double value, std::vector<double> gradient)
      : value_(value), gradient_(std::move(gradient)) {}

  static Loss constant(double value, std::size_t n_params) {
    return Loss(value, std::vector<double>(n_params, 0.0));
  }

  double value() const noexcept { return value_; }
  std::span<const double> gradient() const noexcept { return gradient_; }
  std::span<double> mutable_gradient() noexcept { return gradient_; }

  // this += weight * other
  void add_scaled(const Loss& other, double weight);

  static Loss weighted_sum(const Loss& a, double wa, const Loss& b, double wb);

 private:
  double value_;
  std::vector<double> gradient_;
};

struct GenerationConfig {
  int num_beams = 4;
  int max_output_tokens = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const GenerationConfig& cfg);
void from_json(const nlohmann::json& j, GenerationConfig& cfg);

// Contract every trainable backend satisfies. The toy backend is the reference
// implementation; pretrained backends adapt to the same surface.
class TextToTextModel {
 public:
  virtual ~TextToTextModel() = default;

  virtual std::string backend_id() const = 0;
  virtual ParameterStore& parameters() = 0;
  virtual const ParameterStore& parameters() const = 0;

  // Mean per-token negative log-likelihood of target given source, with gradient.
  // Throws EmptyTarget when target has no tokens.
  virtual Loss compute_loss(std::string_view source, std::string_view target) const = 0;

  // Forward-only variant of compute_loss.
  virtual double loss_value(std::string_view source, std::string_view target) const {
    return compute_loss(source, target).value();
  }

  virtual std::string generate(std::string_view source, const GenerationConfig& cfg) const = 0;

  virtual nlohmann::json config() const = 0;
  virtual std::uint64_t vocabulary_hash() const = 0;
};

struct TrainStepResult {
  double loss_value = 0.0;
  double gradient_norm = 0.0;
};

enum class OptimizerKind { Adam, Sgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view text);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void apply(std::span<double> params, std::span<const double> grad, double lr) = 0;
  virtual void reset() = 0;
};

class SgdOptimizer final : public Optimizer {
 public:
  void apply(std::span<double> params, std::span<const double> grad, double lr) override;
  void reset() override {}
};

class AdamOptimizer final : public Optimizer {
 public:
  AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void apply(std::span<double> params, std::span<const double> grad, double lr) override;
  void reset() override;

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::vector<double> m_;
  std::vector<double> v_;
  long step_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind);

// Applies one update from `loss` to the model's parameters. Throws NonFiniteLoss
// (parameters untouched) if the loss or its gradient is not finite.
TrainStepResult train_step(TextToTextModel& model, const Loss& loss, double lr,
                           Optimizer& optimizer);

}  // namespace xferbench
