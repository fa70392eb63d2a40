#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "xferbench/checkpoint.hpp"
#include "xferbench/error.hpp"
#include "xferbench/promptkit.hpp"
#include "xferbench/toy_model.hpp"

using namespace xferbench;

namespace {

const std::string kSource = "figurative hypothesis: the river is a mirror  premise: the river is calm";
const std::string kTarget = "Entailment explanation: a calm river reflects like a mirror";

ToyModel make_model(std::uint64_t seed = 5) {
  return ToyModel(Vocabulary::build({kSource, kTarget, "Contradiction"}), fixtures::small_config(seed));
}

double central_difference(ToyModel& m, std::size_t i, const std::string& src,
                          const std::string& tgt, double h = 1e-5) {
  auto p = m.parameters().flat();
  const double keep = p[i];
  p[i] = keep + h;
  const double up = m.loss_value(src, tgt);
  p[i] = keep - h;
  const double down = m.loss_value(src, tgt);
  p[i] = keep;
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("vocabulary") {
  const Vocabulary v = Vocabulary::build({"b a", "c a"});
  CHECK(v.size() == 7);
  CHECK(v.token(0) == "<pad>");
  CHECK(v.id("a") == 4);
  CHECK(v.id("zzz") == Vocabulary::kUnk);
  CHECK(v.decode(v.encode("a  b\tc")) == "a b c");
  CHECK(v.hash() == Vocabulary::build({"c a b"}).hash());
  CHECK(v.hash() != Vocabulary::build({"c a b d"}).hash());
}

TEST_CASE("loss is finite, non-negative and deterministic") {
  const ToyModel m = make_model();
  const Loss a = m.compute_loss(kSource, kTarget);
  CHECK(std::isfinite(a.value()));
  CHECK(a.value() >= 0.0);
  CHECK(m.compute_loss(kSource, kTarget).value() == a.value());
  CHECK(m.loss_value(kSource, kTarget) == a.value());
  CHECK_THROWS_AS(m.compute_loss(kSource, "   "), Error);
}

TEST_CASE("same seed gives same parameters") {
  CHECK(make_model(3).parameters().fingerprint() == make_model(3).parameters().fingerprint());
  CHECK(make_model(3).parameters().fingerprint() != make_model(4).parameters().fingerprint());
}

TEST_CASE("analytic gradient matches central differences") {
  ToyModel m = make_model();
  const Loss loss = m.compute_loss(kSource, kTarget);
  Rng rng(99);
  int checked = 0;
  for (const auto& t : m.parameters().tensors()) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = t.offset + rng.below(t.size);
      const double fd = central_difference(m, i, kSource, kTarget);
      const double an = loss.gradient()[i];
      const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
      INFO(t.name, " index ", i, " fd ", fd, " analytic ", an);
      CHECK(std::abs(fd - an) / scale <= 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 30);
}

TEST_CASE("one pair is memorized in 200 steps") {
  ToyModel m = make_model();
  auto opt = make_optimizer(OptimizerKind::Adam);
  const double start = m.loss_value(kSource, kTarget);
  for (int step = 0; step < 200; ++step) train_step(m, m.compute_loss(kSource, kTarget), 1e-2, *opt);
  const double end = m.loss_value(kSource, kTarget);
  CHECK(end <= 0.1 * start);
  GenerationConfig g;
  CHECK(m.generate(kSource, g) == kTarget);
}

TEST_CASE("generation contract on an untrained model") {
  const ToyModel m = make_model();
  for (int beams : {1, 4}) {
    GenerationConfig g;
    g.num_beams = beams;
    g.max_output_tokens = 6;
    const std::string out = m.generate(kSource, g);
    CHECK(split_whitespace(out).size() <= 6);
    CHECK(out.find("<unk>") == std::string::npos);
    CHECK(out.find("<pad>") == std::string::npos);
    CHECK(m.generate(kSource, g) == out);
  }
  GenerationConfig bad;
  bad.num_beams = 0;
  CHECK_THROWS_AS(m.generate(kSource, bad), Error);
}

TEST_CASE("train_step guards and fixed points") {
  ToyModel m = make_model();
  auto opt = make_optimizer(OptimizerKind::Adam);
  const auto before = m.parameters().snapshot();
  const TrainStepResult r = train_step(m, Loss::constant(1.5, m.parameters().size()), 1e-3, *opt);
  CHECK(r.gradient_norm == 0.0);
  CHECK(m.parameters().snapshot() == before);

  try {
    train_step(m, Loss::constant(std::numeric_limits<double>::quiet_NaN(), m.parameters().size()),
               1e-3, *opt);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NonFiniteLoss);
  }
  CHECK(m.parameters().snapshot() == before);
}

TEST_CASE("one small step descends") {
  for (OptimizerKind kind : {OptimizerKind::Adam, OptimizerKind::Sgd}) {
    ToyModel m = make_model();
    auto opt = make_optimizer(kind);
    const double before = m.loss_value(kSource, kTarget);
    train_step(m, m.compute_loss(kSource, kTarget), 1e-3, *opt);
    CHECK(m.loss_value(kSource, kTarget) < before);
  }
}

TEST_CASE("weighted loss sums gradients") {
  const ToyModel m = make_model();
  const Loss a = m.compute_loss(kSource, kTarget);
  const Loss b = m.compute_loss(kSource, "Contradiction");
  const Loss c = Loss::weighted_sum(a, 0.25, b, 0.75);
  CHECK(c.value() == doctest::Approx(0.25 * a.value() + 0.75 * b.value()));
  for (std::size_t i = 0; i < c.gradient().size(); i += 97) {
    CHECK(c.gradient()[i] == doctest::Approx(0.25 * a.gradient()[i] + 0.75 * b.gradient()[i]));
  }
}

TEST_CASE("checkpoint roundtrip") {
  ToyModel m = make_model();
  auto opt = make_optimizer(OptimizerKind::Adam);
  train_step(m, m.compute_loss(kSource, kTarget), 1e-2, *opt);
  const auto dir = fixtures::temp_dir("ckpt");
  save_checkpoint(m, dir / "c", {{"note", "x"}});
  CHECK(read_checkpoint_manifest(dir / "c")["metadata"]["note"] == "x");

  auto loaded = load_toy_checkpoint(dir / "c", m.vocabulary_hash());
  CHECK(loaded->parameters().snapshot() == m.parameters().snapshot());
  CHECK(loaded->vocabulary() == m.vocabulary());
  GenerationConfig g;
  CHECK(loaded->generate(kSource, g) == m.generate(kSource, g));

  ToyModel fresh = make_model(42);
  load_checkpoint_into(fresh, dir / "c");
  CHECK(fresh.parameters().fingerprint() == m.parameters().fingerprint());

  try {
    load_toy_checkpoint(dir / "c", m.vocabulary_hash() + 1);
    FAIL("expected CheckpointMismatch");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::CheckpointMismatch);
  }
  ToyModel other(Vocabulary::build({"entirely different words"}), fixtures::small_config());
  CHECK_THROWS_AS(load_checkpoint_into(other, dir / "c"), Error);
  std::filesystem::remove_all(dir);
}
