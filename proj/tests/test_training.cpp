#include <doctest.h>

#include "fixtures.hpp"
#include "stub_model.hpp"
#include "xferbench/error.hpp"
#include "xferbench/hifeat_mtl.hpp"
#include "xferbench/sft_trainer.hpp"

using namespace xferbench;

namespace {

TrainingHistory history_of(const std::vector<double>& values, SelectionMetric metric) {
  TrainingHistory h;
  for (std::size_t i = 0; i < values.size(); ++i) {
    EpochRecord r;
    r.stage_id = "FigLang";
    r.epoch = static_cast<int>(i);
    if (metric == SelectionMetric::DevLoss) r.dev_loss = values[i];
    else if (metric == SelectionMetric::AccAt0) r.dev_acc_at_0 = values[i];
    else r.dev_acc_at_60 = values[i];
    h.append(r);
  }
  return h;
}

TrainConfig fast_config(std::uint64_t seed = 1) {
  TrainConfig tc;
  tc.lr = 1e-2;
  tc.batch_size = 4;
  tc.seed = seed;
  tc.generation.num_beams = 1;
  tc.generation.max_output_tokens = 12;
  return tc;
}

Dataset impli_set(std::size_t n) {
  std::vector<NLIExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(NLIExample{"he gave up " + std::to_string(i % 3), "threw in the towel",
                             i % 2 ? Label::Contradiction : Label::Entailment, std::nullopt,
                             std::nullopt, "impli"});
  }
  return Dataset(DatasetSchema::impli(), std::move(out));
}

}  // namespace

TEST_CASE("select_checkpoint") {
  CHECK(select_checkpoint(history_of({0.2, 0.5, 0.5, 0.4}, SelectionMetric::AccAt60), "FigLang",
                          SelectionMetric::AccAt60) == 1);
  CHECK(select_checkpoint(history_of({3.0, 2.1, 2.5}, SelectionMetric::DevLoss), "FigLang",
                          SelectionMetric::DevLoss) == 1);
  std::vector<double> rising;
  for (int i = 0; i < 10; ++i) rising.push_back(0.1 * i);
  CHECK(select_checkpoint(history_of(rising, SelectionMetric::AccAt0), "FigLang",
                          SelectionMetric::AccAt0) == 9);
  try {
    select_checkpoint(history_of({0.1}, SelectionMetric::AccAt0), "eSNLI", SelectionMetric::AccAt0);
    FAIL("expected UnknownStage");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::UnknownStage);
  }
}

TEST_CASE("history rejects out-of-order records") {
  TrainingHistory h;
  EpochRecord r;
  r.epoch = 1;
  h.append(r);
  r.epoch = 0;
  CHECK_THROWS_AS(h.append(r), Error);
}

TEST_CASE("SFT over IMPLI then FigLang gives 13 ordered records") {
  const Dataset fig = fixtures::memorization_set();
  const Dataset imp = impli_set(8);
  ToyModel m(Vocabulary::build(fixtures::texts_of({&fig, &imp})), fixtures::small_config());
  DataMap data{{"IMPLI", {imp, truncate(imp, 2)}}, {"FigLang", {fig, truncate(fig, 4)}}};
  const std::vector<Stage> stages{{"IMPLI", 3, false, SelectionMetric::AccAt0},
                                  {"FigLang", 10, true, SelectionMetric::AccAt60}};
  const TrainingHistory h = run_sft(m, stages, data, fast_config());
  REQUIRE(h.records().size() == 13);
  for (std::size_t i = 0; i < 13; ++i) {
    const auto& r = h.records()[i];
    CHECK(r.stage_id == (i < 3 ? "IMPLI" : "FigLang"));
    CHECK(r.epoch == static_cast<int>(i < 3 ? i : i - 3));
    CHECK_FALSE(r.w_label.has_value());
  }
  // Stage isolation: stage 2 starts from stage 1's selected parameters.
  REQUIRE(h.summaries().size() == 2);
  CHECK(h.summaries()[1].start_fingerprint == h.summaries()[0].selected_fingerprint);
  CHECK(h.summaries()[1].selected_fingerprint == m.parameters().fingerprint());
  CHECK(h.steps().empty());
}

TEST_CASE("SFT rejects inconsistent stages") {
  const Dataset imp = impli_set(4);
  ToyModel m(Vocabulary::build(fixtures::texts_of({&imp})), fixtures::small_config());
  DataMap data{{"IMPLI", {imp, imp}}};
  CHECK_THROWS_AS(run_sft(m, {{"IMPLI", 1, true, SelectionMetric::AccAt0}}, data, fast_config()), Error);
  CHECK_THROWS_AS(run_sft(m, {{"eSNLI", 1, true, SelectionMetric::AccAt0}}, data, fast_config()), Error);
  CHECK_THROWS_AS(run_sft(m, {}, data, fast_config()), Error);
  CHECK_THROWS_AS(run_sft(m, {{"IMPLI", 0, false, SelectionMetric::AccAt0}}, data, fast_config()),
                  Error);
}

TEST_CASE("single stage single epoch equals one plain epoch") {
  const Dataset fig = fixtures::memorization_set();
  const auto vocab = Vocabulary::build(fixtures::texts_of({&fig}));
  ToyModel a(vocab, fixtures::small_config());
  ToyModel b(vocab, fixtures::small_config());
  TrainConfig tc = fast_config();
  run_sft(a, {{"FigLang", 1, true, SelectionMetric::AccAt60}}, {{"FigLang", {fig, Dataset(fig.schema(), {})}}},
          tc);

  auto opt = make_optimizer(tc.optimizer);
  Rng rng(derive_seed(tc.seed, 0, 0));
  const auto order = rng.permutation(fig.size());
  for (std::size_t begin = 0; begin < fig.size(); begin += tc.batch_size) {
    Loss batch = Loss::constant(0.0, b.parameters().size());
    for (std::size_t i = begin; i < begin + tc.batch_size; ++i) {
      const auto& e = fig[order[i]];
      batch.add_scaled(b.compute_loss(base_source(e, SourceVariant::Standard), serialize_target(e, true)),
                       1.0 / static_cast<double>(tc.batch_size));
    }
    train_step(b, batch, tc.lr, *opt);
  }
  CHECK(a.parameters().snapshot() == b.parameters().snapshot());
}

TEST_CASE("phase weights") {
  CHECK(PhaseWeights::label_heavy().w_expl() == doctest::Approx(0.1));
  CHECK(PhaseWeights::explanation_heavy().w_expl() == doctest::Approx(0.9));
  CHECK_THROWS_AS(PhaseWeights(1.5), Error);
  CHECK_THROWS_AS(PhaseWeights(-0.1), Error);
  const auto plan = default_phase_plan(DatasetSchema::figlang());
  REQUIRE(plan.size() == 2);
  CHECK(plan[0].weights.w_label() == 0.9);
  CHECK(plan[1].weights.w_label() == 0.1);
  CHECK(plan[0].epochs == 10);
  CHECK(default_phase_plan(DatasetSchema::impli()).at(0).weights.w_label() == 1.0);
}

TEST_CASE("two-pass combined loss with a stub") {
  fixtures::StubModel m;
  const NLIExample e = fixtures::memorization_set()[0];
  const auto r = forward_two_pass(m, e, LabelSource::Gold, PhaseWeights::label_heavy());
  CHECK(r.label_loss == 2.0);
  CHECK(r.expl_loss == 4.0);
  CHECK(r.combined_loss == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(r.combined.gradient()[0] == doctest::Approx(0.9));
  CHECK(r.combined.gradient()[1] == doctest::Approx(0.1));
  CHECK(r.second_pass_source == label_prefixed(e.label, base_source(e, SourceVariant::Standard)));

  CHECK(forward_two_pass(m, e, LabelSource::Gold, PhaseWeights(1.0)).combined_loss == r.label_loss);
  CHECK(forward_two_pass(m, e, LabelSource::Gold, PhaseWeights(0.0)).combined_loss == r.expl_loss);

  NLIExample bare = e;
  bare.explanation.reset();
  bare.fig_type.reset();
  try {
    forward_two_pass(m, bare, LabelSource::Gold, PhaseWeights(0.5));
    FAIL("expected MissingExplanation");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::MissingExplanation);
  }
}

TEST_CASE("predicted conditioning uses the model's own label") {
  fixtures::StubModel m;
  const NLIExample e = fixtures::memorization_set()[0];  // gold Entailment
  const std::string src = base_source(e, SourceVariant::Standard);
  m.outputs[src] = "Contradiction";
  const auto pred = forward_two_pass(m, e, LabelSource::Predicted, PhaseWeights(0.5));
  CHECK(pred.label_source_used == LabelSource::Predicted);
  CHECK(pred.conditioning_label == Label::Contradiction);
  CHECK(pred.second_pass_source == label_prefixed(Label::Contradiction, src));
  const auto gold = forward_two_pass(m, e, LabelSource::Gold, PhaseWeights(0.5));
  CHECK(gold.conditioning_label == Label::Entailment);
  CHECK(gold.label_source_used == LabelSource::Gold);
}

TEST_CASE("shared-weight gradient decomposition on the toy backend") {
  const Dataset fig = fixtures::memorization_set();
  ToyModel m(Vocabulary::build(fixtures::texts_of({&fig})), fixtures::small_config());
  const NLIExample& e = fig[3];
  const auto r = forward_two_pass(m, e, LabelSource::Gold, PhaseWeights(0.5));
  const std::string src = base_source(e, SourceVariant::Standard);
  const Loss g1 = m.compute_loss(src, serialize_target(e, false));
  const Loss g2 = m.compute_loss(label_prefixed(e.label, src), serialize_target(e, true));
  for (std::size_t i = 0; i < g1.gradient().size(); ++i) {
    const double expect = 0.5 * g1.gradient()[i] + 0.5 * g2.gradient()[i];
    CHECK(r.combined.gradient()[i] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("HiFeat on FigLang alone runs two phases of ten epochs") {
  const Dataset fig = fixtures::memorization_set();
  ToyModel m(Vocabulary::build(fixtures::texts_of({&fig})), fixtures::small_config());
  DataMap data{{"FigLang", {fig, truncate(fig, 4)}}};
  const TrainingHistory h =
      run_hifeat(m, {{"FigLang", 10, true, SelectionMetric::AccAt60}},
                 {default_phase_plan(fig.schema())}, data, fast_config());
  REQUIRE(h.records().size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(h.records()[i].phase == (i < 10 ? 0 : 1));
    CHECK(*h.records()[i].w_label == (i < 10 ? 0.9 : 0.1));
  }
  REQUIRE(h.summaries().size() == 2);
  CHECK(h.summaries()[1].start_fingerprint == h.summaries()[0].selected_fingerprint);
  CHECK(h.steps().size() == 20 * fig.size());
  for (const auto& s : h.steps()) {
    CHECK(s.combined_loss == doctest::Approx(s.w_label * s.label_loss + s.w_expl * s.expl_loss).epsilon(1e-12));
  }
}

TEST_CASE("HiFeat IMPLI stage is label-only") {
  const Dataset fig = fixtures::memorization_set();
  const Dataset imp = impli_set(8);
  ToyModel m(Vocabulary::build(fixtures::texts_of({&fig, &imp})), fixtures::small_config());
  DataMap data{{"IMPLI", {imp, truncate(imp, 2)}}, {"FigLang", {fig, truncate(fig, 2)}}};
  const std::vector<Stage> stages{{"IMPLI", 3, false, SelectionMetric::AccAt0},
                                  {"FigLang", 2, true, SelectionMetric::AccAt60}};
  const TrainingHistory h = run_hifeat(
      m, stages, {default_phase_plan(imp.schema(), 3), default_phase_plan(fig.schema(), 2)}, data,
      fast_config());
  REQUIRE(h.records().size() == 7);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(*h.records()[i].expl_loss == 0.0);
    CHECK(*h.records()[i].w_label == 1.0);
  }
  CHECK_THROWS_AS(run_hifeat(m, {{"FigLang", 1, true, SelectionMetric::DevLoss}},
                             {default_phase_plan(fig.schema())}, data, fast_config()),
                  Error);
}

TEST_CASE("two-pass prediction after memorizing one example") {
  const Dataset fig = fixtures::memorization_set();
  const Dataset one = truncate(fig, 1);
  ToyModel m(Vocabulary::build(fixtures::texts_of({&fig})), fixtures::small_config());
  auto opt = make_optimizer(OptimizerKind::Adam);
  for (int i = 0; i < 200; ++i) {
    train_step(m, forward_two_pass(m, one[0], LabelSource::Gold, PhaseWeights(0.5)).combined, 1e-2, *opt);
  }
  GenerationConfig g;
  const Prediction p = predict_two_pass(m, one[0], g);
  CHECK(p.label == one[0].label);
  CHECK(p.explanation == *one[0].explanation);
  CHECK(p.parse_ok);
  const Prediction q = predict_two_pass(m, one[0], g);
  CHECK(q.explanation == p.explanation);

  ToyModel untrained(Vocabulary::build(fixtures::texts_of({&fig})), fixtures::small_config(9));
  CHECK_NOTHROW(predict_two_pass(untrained, fig[5], g));
}
