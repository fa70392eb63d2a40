#include "xferbench/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "xferbench/error.hpp"
#include "xferbench/rng.hpp"

namespace xferbench {

std::span<double> ParameterStore::add(std::string name, std::vector<std::size_t> shape) {
  for (const auto& t : tensors_) {
    if (t.name == name) throw Error(ErrorCode::InvalidConfig, "duplicate tensor " + name);
  }
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        std::multiplies<>());
  TensorInfo info{std::move(name), std::move(shape), data_.size(), n};
  data_.resize(data_.size() + n, 0.0);
  tensors_.push_back(std::move(info));
  return std::span<double>(data_).subspan(tensors_.back().offset, n);
}

const TensorInfo& ParameterStore::info(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::InvalidConfig, "no tensor named " + std::string(name));
}

std::span<double> ParameterStore::get(std::string_view name) {
  const auto& t = info(name);
  return std::span<double>(data_).subspan(t.offset, t.size);
}

std::span<const double> ParameterStore::get(std::string_view name) const {
  const auto& t = info(name);
  return std::span<const double>(data_).subspan(t.offset, t.size);
}

void ParameterStore::restore(std::span<const double> values) {
  if (values.size() != data_.size()) {
    throw Error(ErrorCode::CheckpointMismatch, "parameter count mismatch");
  }
  std::copy(values.begin(), values.end(), data_.begin());
}

std::uint64_t ParameterStore::fingerprint() const {
  Fnv1a h;
  h.update_bytes(data_.data(), data_.size() * sizeof(double));
  return h.digest();
}

void Loss::add_scaled(const Loss& other, double weight) {
  if (other.gradient_.size() != gradient_.size()) {
    throw Error(ErrorCode::InvalidConfig, "gradient size mismatch");
  }
  value_ += weight * other.value_;
  for (std::size_t i = 0; i < gradient_.size(); ++i) gradient_[i] += weight * other.gradient_[i];
}

Loss Loss::weighted_sum(const Loss& a, double wa, const Loss& b, double wb) {
  if (a.gradient_.size() != b.gradient_.size()) {
    throw Error(ErrorCode::InvalidConfig, "gradient size mismatch");
  }
  std::vector<double> g(a.gradient_.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = wa * a.gradient_[i] + wb * b.gradient_[i];
  return Loss(wa * a.value_ + wb * b.value_, std::move(g));
}

void GenerationConfig::validate() const {
  if (num_beams < 1) throw Error(ErrorCode::InvalidConfig, "num_beams must be >= 1");
  if (max_output_tokens < 1) throw Error(ErrorCode::InvalidConfig, "max_output_tokens must be >= 1");
}

void to_json(nlohmann::json& j, const GenerationConfig& cfg) {
  j = nlohmann::json{{"num_beams", cfg.num_beams},
                     {"max_output_tokens", cfg.max_output_tokens},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, GenerationConfig& cfg) {
  cfg.num_beams = j.value("num_beams", cfg.num_beams);
  cfg.max_output_tokens = j.value("max_output_tokens", cfg.max_output_tokens);
  cfg.seed = j.value("seed", cfg.seed);
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind optimizer_kind_from_string(std::string_view text) {
  std::string key(text);
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "adam") return OptimizerKind::Adam;
  if (key == "sgd") return OptimizerKind::Sgd;
  throw Error(ErrorCode::InvalidConfig, "unknown optimizer '" + std::string(text) + "'");
}

void SgdOptimizer::apply(std::span<double> params, std::span<const double> grad, double lr) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

void AdamOptimizer::apply(std::span<double> params, std::span<const double> grad, double lr) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    step_ = 0;
  }
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
  }
}

void AdamOptimizer::reset() {
  m_.clear();
  v_.clear();
  step_ = 0;
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind) {
  if (kind == OptimizerKind::Sgd) return std::make_unique<SgdOptimizer>();
  return std::make_unique<AdamOptimizer>();
}

TrainStepResult train_step(TextToTextModel& model, const Loss& loss, double lr,
                           Optimizer& optimizer) {
  if (!std::isfinite(loss.value())) {
    throw Error(ErrorCode::NonFiniteLoss, "loss value " + std::to_string(loss.value()));
  }
  auto params = model.parameters().flat();
  auto grad = loss.gradient();
  if (grad.size() != params.size()) {
    throw Error(ErrorCode::InvalidConfig, "loss gradient does not match parameter store");
  }
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  if (!std::isfinite(sq)) throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient");
  optimizer.apply(params, grad, lr);
  return {loss.value(), std::sqrt(sq)};
}

}  // namespace xferbench
