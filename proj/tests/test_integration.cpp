// End-to-end run on realistically shaped inputs: English-like sentences with
// punctuation, multi-word knowledge-graph concepts, and 300-dimensional
// embedding files in the standard text format.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "csqn/config.hpp"
#include "csqn/train.hpp"
#include "testutil.hpp"

using namespace csqn;

namespace {

void write_embeddings(const std::string& path, const std::vector<std::string>& keys,
                      int dim, uint64_t seed) {
  testutil::Rng rng(seed);
  std::ofstream out(path);
  for (const std::string& k : keys) {
    out << k;
    for (int i = 0; i < dim; ++i) out << ' ' << rng.uniform(-0.5, 0.5);
    out << '\n';
  }
}

}  // namespace

TEST_CASE("full pipeline on text-shaped data with 300-dim embeddings") {
  testutil::TempDir tmp("integration");
  const int dim = 300;

  testutil::write_file(tmp.path("kg.tsv"),
                       "solar panel\tused_for\telectricity\n"
                       "solar panel\tis_a\tdevice\n"
                       "sunlight\trelated_to\tsolar panel\n"
                       "electricity\trelated_to\tpower\n"
                       "plant\trelated_to\tphotosynthesis\n"
                       "photosynthesis\trelated_to\tsunlight\n"
                       "farmer\tcapable_of\tploughing\n"
                       "field\trelated_to\tfarmer\n");

  std::vector<ExamplePair> pairs = {
      {"A solar panel converts sunlight into electricity.",
       "Solar panels produce power.", Label::entails},
      {"The farmer is ploughing the field.", "Plants use photosynthesis.",
       Label::neutral},
      {"Plants rely on photosynthesis, which needs sunlight.",
       "Photosynthesis requires sunlight.", Label::entails},
      {"Electricity flows through the device.", "The farmer owns a field.",
       Label::neutral},
  };
  save_dataset(tmp.path("train.jsonl"), pairs);
  save_dataset(tmp.path("dev.jsonl"), pairs);

  std::vector<std::string> vocab = {
      "a",       "solar",        "panel",   "panels", "converts", "sunlight",
      "into",    "electricity",  "the",     "farmer", "is",       "ploughing",
      "field",   "plants",       "use",     "power",  "produce",  "rely",
      "on",      "photosynthesis"};
  write_embeddings(tmp.path("word_emb.txt"), vocab, dim, 991);
  // Multi-word concepts ship with underscored keys.
  write_embeddings(tmp.path("concept_emb.txt"),
                   {"solar_panel", "electricity", "device", "sunlight", "power",
                    "plant", "photosynthesis", "farmer", "ploughing", "field"},
                   dim, 992);

  const KnowledgeGraph kg = KnowledgeGraph::load_triples(tmp.path("kg.tsv"));
  const EmbeddingTable word_emb = EmbeddingTable::load(tmp.path("word_emb.txt"), dim);
  const EmbeddingTable concept_emb =
      EmbeddingTable::load(tmp.path("concept_emb.txt"), dim);

  // Multi-word concepts come out of matching with their spans.
  const auto toks = tokenize(pairs[0].premise);
  const auto spans = match_concepts(toks, kg);
  bool found_solar_panel = false;
  for (const MatchSpan& s : spans)
    if (kg.concept_label(s.concept_id) == "solar panel")
      found_solar_panel = s.end == s.start + 1;
  CHECK(found_solar_panel);

  ModelDims dims{dim, dim, 8, 8};
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.graph_model = GraphModelKind::gmatch;
  const TrainOutput out =
      train(pairs, pairs, kg, word_emb, concept_emb, dims, cfg);
  CHECK(out.history.size() == 2);
  CHECK(out.optimizer_steps == 4);
  for (const EpochStats& e : out.history) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(e.dev_accuracy >= 0.0);
    CHECK(e.dev_accuracy <= 1.0);
  }

  // The multi-word concept resolves to its stored vector, not an OOV draw.
  const auto prepared_one =
      prepare_example(pairs[0], kg, word_emb, concept_emb, cfg.graph_strategy,
                      cfg.graph_model);
  REQUIRE(!prepared_one.premise_concepts.empty());
  CHECK(prepared_one.premise_concepts[0].values() ==
        concept_emb.lookup("solar_panel"));

  // Evaluation with the oracle breakdown works on the trained weights.
  ParamStore store;
  MergedModelParams model =
      build_merged_model(store, dims, cfg.graph_model, cfg.seed);
  out.final_checkpoint.apply_to(store);
  const auto prepared = prepare_dataset(pairs, kg, word_emb, concept_emb,
                                        cfg.graph_strategy, cfg.graph_model);
  const EvalReport report = evaluate(model, prepared, EvalMode::merged, true);
  CHECK(*report.oracle_accuracy >=
        std::max(*report.text_accuracy, *report.graph_accuracy));
}
