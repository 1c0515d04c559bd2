#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csqn/errors.hpp"
#include "csqn/gradcheck.hpp"
#include "csqn/synthetic.hpp"
#include "csqn/train.hpp"
#include "testutil.hpp"

using namespace csqn;
using testutil::Rng;

namespace {

struct SmallWorld {
  SyntheticCorpus corpus;
  KnowledgeGraph kg;
  SmallWorld(uint64_t seed, int n_train, int n_dev, int vocab = 24, int dim = 6)
      : corpus(gen_synthetic(seed, n_train, n_dev, vocab, dim)),
        kg(corpus.kg_triples) {}
};

ModelDims small_dims(int emb = 6) { return {emb, emb, 4, 4}; }

}  // namespace

TEST_CASE("cross_entropy_loss analytic values") {
  Tensor even({2}, {0.0, 0.0});
  CHECK(cross_entropy_loss(even, 0).scalar_value() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(cross_entropy_loss(even, 1).scalar_value() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor confident({2}, {10.0, -10.0});
  const double loss = cross_entropy_loss(confident, 0).scalar_value();
  CHECK(loss == doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-9));
  CHECK(loss < 1e-8);
  CHECK(loss > 0.0);

  CHECK_THROWS_AS(cross_entropy_loss(even, 2), std::domain_error);
  CHECK_THROWS_AS(cross_entropy_loss(Tensor({3}, {0, 0, 0}), 0), DimensionError);
}

TEST_CASE("cross_entropy_loss is nonnegative and differentiable") {
  Rng rng(91);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor logits({2}, rng.vec(2, -50.0, 50.0), true);
    const int label = trial % 2;
    Tensor loss = cross_entropy_loss(logits, label);
    CHECK(loss.scalar_value() >= 0.0);
  }
  ParamStore store;
  store.create("logits", {2}, {0.3, -0.8});
  auto f = [](ParamStore& p) { return cross_entropy_loss(p.get("logits"), 1); };
  CHECK(finite_diff_check(f, store).max_rel_error < 1e-8);
}

TEST_CASE("adagrad single analytic step") {
  ParamStore store;
  Tensor& w = store.create("w", {1}, {5.0});
  w.zero_grad();
  // Plant a gradient of 3 by hand.
  Tensor loss = scale(at(w, 0), 3.0);
  backward(loss);
  AdagradState state;
  adagrad_step(state, store, 0.1, 1e-10);
  CHECK(w.value(0) == doctest::Approx(5.0 - 0.1).epsilon(1e-9));
  CHECK(state.accum.at("w")[0] == doctest::Approx(9.0));
}

TEST_CASE("adagrad zero gradient leaves everything unchanged") {
  ParamStore store;
  Tensor& w = store.create("w", {2}, {1.0, -2.0});
  w.zero_grad();
  AdagradState state;
  adagrad_step(state, store, 0.1, 1e-10);
  CHECK(w.values() == std::vector<double>{1.0, -2.0});
  CHECK(state.accum.at("w") == std::vector<double>{0.0, 0.0});
}

TEST_CASE("adagrad shrinks repeated equal updates and accumulators never decrease") {
  ParamStore store;
  Tensor& w = store.create("w", {1}, {0.0});
  AdagradState state;
  auto step_with_grad_one = [&]() {
    store.zero_grad();
    backward(at(w, 0));
    const double before = w.value(0);
    adagrad_step(state, store, 0.1, 1e-10);
    return before - w.value(0);
  };
  const double d1 = step_with_grad_one();
  const double g1 = state.accum.at("w")[0];
  const double d2 = step_with_grad_one();
  const double g2 = state.accum.at("w")[0];
  CHECK(d1 == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(d2 < d1);
  CHECK(g2 >= g1);
}

TEST_CASE("adagrad requires gradients") {
  ParamStore store;
  store.create("w", {1}, {0.0});
  AdagradState state;
  CHECK_THROWS_AS(adagrad_step(state, store, 0.1, 1e-10), StateError);
}

TEST_CASE("model_logits supports all three modes") {
  SmallWorld world(101, 4, 2);
  ParamStore store;
  MergedModelParams model =
      build_merged_model(store, small_dims(), GraphModelKind::gconattn, 102);
  const auto prepared =
      prepare_dataset(world.corpus.train, world.kg, world.corpus.word_embeddings,
                      world.corpus.concept_embeddings, GraphStrategy::concepts_only,
                      GraphModelKind::gconattn);
  for (EvalMode mode : {EvalMode::merged, EvalMode::text_only, EvalMode::graph_only}) {
    Tensor logits = model_logits(model, prepared[0], mode);
    CHECK(logits.shape() == Shape{2});
    for (int i = 0; i < 2; ++i) CHECK(std::isfinite(logits.value(i)));
  }

  ParamStore store2;
  MergedModelParams text_only_model =
      build_merged_model(store2, small_dims(), GraphModelKind::none, 103);
  const auto prepared2 =
      prepare_dataset(world.corpus.train, world.kg, world.corpus.word_embeddings,
                      world.corpus.concept_embeddings, GraphStrategy::concepts_only,
                      GraphModelKind::none);
  CHECK_THROWS_AS(model_logits(text_only_model, prepared2[0], EvalMode::graph_only),
                  StateError);
  Tensor merged = model_logits(text_only_model, prepared2[0], EvalMode::merged);
  CHECK(merged.shape() == Shape{2});
}

TEST_CASE("gradient reaches every parameter on a mixed batch") {
  SmallWorld world(104, 6, 2);
  for (GraphModelKind kind : {GraphModelKind::gmatch, GraphModelKind::gconattn}) {
    ParamStore store;
    MergedModelParams model = build_merged_model(store, small_dims(), kind, 105);
    auto prepared =
        prepare_dataset(world.corpus.train, world.kg, world.corpus.word_embeddings,
                        world.corpus.concept_embeddings,
                        GraphStrategy::concepts_only, kind);
    // Add an empty-graph example so the sentinel participates.
    ExamplePair odd{"zzz qqq xxx", "yyy www", Label::neutral};
    prepared.push_back(prepare_example(odd, world.kg, world.corpus.word_embeddings,
                                       world.corpus.concept_embeddings,
                                       GraphStrategy::concepts_only, kind));
    CHECK(prepared.back().premise_concepts.empty());

    store.zero_grad();
    Tensor batch_loss;
    for (const PreparedExample& ex : prepared) {
      Tensor loss = cross_entropy_loss(model_logits(model, ex), ex.label);
      batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
    }
    backward(batch_loss);
    for (const auto& [name, t] : store) {
      double norm = 0.0;
      for (double g : t.grad()) norm += std::abs(g);
      INFO("parameter ", name);
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("embedding vectors stay frozen through training steps") {
  SmallWorld world(115, 4, 2);
  ParamStore store;
  MergedModelParams model =
      build_merged_model(store, small_dims(), GraphModelKind::gconattn, 116);
  const auto prepared =
      prepare_dataset(world.corpus.train, world.kg, world.corpus.word_embeddings,
                      world.corpus.concept_embeddings, GraphStrategy::concepts_only,
                      GraphModelKind::gconattn);
  store.zero_grad();
  backward(cross_entropy_loss(model_logits(model, prepared[0]), prepared[0].label));
  // Lookups are constants: no grad buffer, no requires_grad, absent from the
  // store's parameter names.
  for (const Tensor& t : prepared[0].premise_words) {
    CHECK(!t.requires_grad());
    CHECK(!t.has_grad());
  }
  for (const Tensor& t : prepared[0].premise_concepts) CHECK(!t.requires_grad());
  for (const auto& [name, t] : store) CHECK(name.find("embedding") == std::string::npos);
}

TEST_CASE("evaluate counts correct argmax labels and recomputes per example") {
  SmallWorld world(106, 8, 4);
  ParamStore store;
  MergedModelParams model =
      build_merged_model(store, small_dims(), GraphModelKind::gconattn, 107);
  const auto prepared =
      prepare_dataset(world.corpus.dev, world.kg, world.corpus.word_embeddings,
                      world.corpus.concept_embeddings, GraphStrategy::concepts_only,
                      GraphModelKind::gconattn);
  EvalReport report = evaluate(model, prepared, EvalMode::merged);
  REQUIRE(report.predictions.size() == prepared.size());
  int correct = 0;
  for (size_t i = 0; i < prepared.size(); ++i) {
    const int expect =
        static_cast<int>(classify(model_logits(model, prepared[i])).label);
    CHECK(report.predictions[i] == expect);
    if (expect == prepared[i].label) ++correct;
  }
  CHECK(report.accuracy ==
        doctest::Approx(static_cast<double>(correct) / prepared.size()));

  CHECK_THROWS_AS(evaluate(model, {}, EvalMode::merged), std::domain_error);
}

TEST_CASE("oracle report invariants hold") {
  SmallWorld world(108, 10, 6);
  ParamStore store;
  MergedModelParams model =
      build_merged_model(store, small_dims(), GraphModelKind::gmatch, 109);
  const auto prepared =
      prepare_dataset(world.corpus.dev, world.kg, world.corpus.word_embeddings,
                      world.corpus.concept_embeddings, GraphStrategy::concepts_only,
                      GraphModelKind::gmatch);
  EvalReport report = evaluate(model, prepared, EvalMode::merged, true);
  REQUIRE(report.text_accuracy.has_value());
  REQUIRE(report.graph_accuracy.has_value());
  REQUIRE(report.oracle_accuracy.has_value());
  const double t = *report.text_accuracy, g = *report.graph_accuracy,
               o = *report.oracle_accuracy;
  CHECK(o >= std::max(t, g));
  CHECK(o <= std::min(1.0, t + g));
}

TEST_CASE("oracle_accuracy hand cases") {
  // text correct on examples {1,2}, graph on {2,3}, n=4 -> union 3/4
  const std::vector<int> labels = {1, 1, 1, 1};
  const std::vector<int> text_preds = {0, 1, 1, 0};
  const std::vector<int> graph_preds = {0, 0, 1, 1};
  CHECK(oracle_accuracy(text_preds, graph_preds, labels) == doctest::Approx(0.75));

  const std::vector<int> graph_wrong = {0, 0, 0, 0};
  CHECK(oracle_accuracy(text_preds, graph_wrong, labels) == doctest::Approx(0.5));

  const std::vector<int> first_half = {1, 1, 0, 0};
  const std::vector<int> second_half = {0, 0, 1, 1};
  CHECK(oracle_accuracy(first_half, second_half, labels) == doctest::Approx(1.0));

  const std::vector<int> short_preds = {1, 1};
  CHECK_THROWS_AS(oracle_accuracy(short_preds, graph_preds, labels),
                  std::domain_error);
}

TEST_CASE("train performs one step per batch and honors partial batches") {
  SmallWorld world(110, 5, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;  // 5 examples -> batches of 2, 2, 1
  cfg.graph_model = GraphModelKind::gconattn;
  TrainOutput out = train(world.corpus.train, world.corpus.dev, world.kg,
                          world.corpus.word_embeddings,
                          world.corpus.concept_embeddings, small_dims(), cfg);
  CHECK(out.optimizer_steps == 3);
  CHECK(out.history.size() == 1);

  SmallWorld tiny(111, 1, 1);
  TrainConfig cfg1;
  cfg1.epochs = 1;
  cfg1.batch_size = 40;
  cfg1.graph_model = GraphModelKind::gconattn;
  TrainOutput one = train(tiny.corpus.train, tiny.corpus.dev, tiny.kg,
                          tiny.corpus.word_embeddings,
                          tiny.corpus.concept_embeddings, small_dims(), cfg1);
  CHECK(one.optimizer_steps == 1);

  CHECK_THROWS_AS(train({}, tiny.corpus.dev, tiny.kg, tiny.corpus.word_embeddings,
                        tiny.corpus.concept_embeddings, small_dims(), cfg1),
                  std::domain_error);
}

TEST_CASE("training is bitwise deterministic under a fixed seed") {
  SmallWorld world(112, 30, 10);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.graph_model = GraphModelKind::gmatch;
  auto run = [&]() {
    return train(world.corpus.train, world.corpus.dev, world.kg,
                 world.corpus.word_embeddings, world.corpus.concept_embeddings,
                 small_dims(), cfg, "{\"echo\":1}");
  };
  TrainOutput a = run();
  TrainOutput b = run();
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].dev_accuracy == b.history[i].dev_accuracy);
  }
  CHECK(a.final_checkpoint == b.final_checkpoint);
  CHECK(a.best_checkpoint == b.best_checkpoint);
}

TEST_CASE("loss on one repeated example decreases monotonically after step 3") {
  SmallWorld world(113, 1, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 15;
  cfg.batch_size = 1;
  cfg.graph_model = GraphModelKind::gconattn;
  TrainOutput out = train(world.corpus.train, world.corpus.dev, world.kg,
                          world.corpus.word_embeddings,
                          world.corpus.concept_embeddings, small_dims(), cfg);
  REQUIRE(out.history.size() == 15);
  for (size_t i = 3; i + 1 < out.history.size(); ++i)
    CHECK(out.history[i + 1].train_loss <= out.history[i].train_loss + 1e-12);
}

TEST_CASE("checkpoint round-trips bitwise through disk") {
  testutil::TempDir tmp("ckpt");
  ParamStore store;
  MergedModelParams model =
      build_merged_model(store, small_dims(), GraphModelKind::gmatch, 114);
  (void)model;
  Checkpoint ck = Checkpoint::from_store(store, "{\"cfg\": [1, 2]}");
  ck.save(tmp.path("m.ckpt"));
  Checkpoint back = Checkpoint::load(tmp.path("m.ckpt"));
  CHECK(back == ck);
  CHECK(testutil::read_file(tmp.path("m.ckpt")).substr(0, 4) == "CSQN");

  // Applying restores values exactly.
  ParamStore store2;
  build_merged_model(store2, small_dims(), GraphModelKind::gmatch, 999);
  back.apply_to(store2);
  for (const auto& [name, t] : store) CHECK(store2.get(name).values() == t.values());

  // Mismatched stores are rejected.
  ParamStore store3;
  build_merged_model(store3, small_dims(), GraphModelKind::gconattn, 1);
  CHECK_THROWS_AS(back.apply_to(store3), StateError);
}

TEST_CASE("checkpoint loader rejects garbage") {
  testutil::TempDir tmp("ckptbad");
  testutil::write_file(tmp.path("bad.ckpt"), "not a checkpoint");
  CHECK_THROWS_WITH_AS(Checkpoint::load(tmp.path("bad.ckpt")),
                       doctest::Contains("magic"), std::runtime_error);
  testutil::write_file(tmp.path("trunc.ckpt"), "CSQN");
  CHECK_THROWS_AS(Checkpoint::load(tmp.path("trunc.ckpt")), std::runtime_error);
}

TEST_CASE("history file format") {
  testutil::TempDir tmp("hist");
  std::vector<EpochStats> history = {{1, 0.5, 0.25}, {2, 0.25, 0.75}};
  write_history(tmp.path("h.tsv"), history);
  const std::string content = testutil::read_file(tmp.path("h.tsv"));
  CHECK(content.find("1\t0.5\t0.25\n") != std::string::npos);
  CHECK(content.find("2\t0.25\t0.75\n") != std::string::npos);
}

TEST_CASE("train config validation") {
  TrainConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  TrainConfig bad2;
  bad2.batch_size = 0;
  CHECK_THROWS_AS(bad2.validate(), std::domain_error);
  TrainConfig bad3;
  bad3.graph_model = GraphModelKind::gmatch;
  bad3.graph_strategy = GraphStrategy::one_hop;
  CHECK_THROWS_AS(bad3.validate(), std::domain_error);
  TrainConfig ok;
  ok.graph_model = GraphModelKind::gconattn;
  ok.graph_strategy = GraphStrategy::two_hop;
  CHECK_NOTHROW(ok.validate());
}
