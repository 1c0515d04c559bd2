#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "csqn/cli.hpp"
#include "csqn/config.hpp"
#include "csqn/errors.hpp"
#include "csqn/synthetic.hpp"
#include "csqn/train.hpp"
#include "testutil.hpp"

using namespace csqn;
using nlohmann::json;

namespace {

int run(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"conseqnet"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kFixtureKg =
    "a\trelated_to\tb\n"
    "b\trelated_to\tc\n"
    "a\trelated_to\tc\n"
    "c\tcauses\td\n";

}  // namespace

TEST_CASE("config JSON round trip") {
  RunConfig cfg;
  cfg.paths.train = "/tmp/x/train.jsonl";
  cfg.paths.checkpoint = "/tmp/x/m.ckpt";
  cfg.model.hidden = 12;
  cfg.train.learning_rate = 0.005;
  cfg.train.seed = 1234567890123ULL;
  cfg.train.graph_model = GraphModelKind::gconattn;
  cfg.train.graph_strategy = GraphStrategy::two_hop;
  RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back == cfg);
  CHECK(RunConfig::from_json(back.to_json()).to_json() == back.to_json());
}

TEST_CASE("config rejects bad values") {
  CHECK_THROWS(RunConfig::from_json("{ not json"));
  CHECK_THROWS_AS(
      RunConfig::from_json("{\"train\": {\"learning_rate\": 0}}"),
      std::domain_error);
  CHECK_THROWS_AS(
      RunConfig::from_json("{\"train\": {\"graph_model\": \"what\"}}"),
      std::domain_error);
  // gmatch demands concepts_only ordering.
  CHECK_THROWS_AS(RunConfig::from_json(
                      "{\"train\": {\"graph_model\": \"gmatch\", "
                      "\"graph_strategy\": \"one_hop\"}}"),
                  std::domain_error);
}

TEST_CASE("kg-stats runs and bad usage fails with code 1") {
  testutil::TempDir tmp("cli_kg");
  testutil::write_file(tmp.path("kg.tsv"), kFixtureKg);
  CHECK(run({"kg-stats", tmp.path("kg.tsv").c_str()}) == 0);
  CHECK(run({"kg-stats", "--kg", tmp.path("kg.tsv").c_str()}) == 0);
  CHECK(run({"kg-stats", "--kg", tmp.path("missing.tsv").c_str()}) == 1);
  CHECK(run({"kg-stats"}) == 1);
  CHECK(run({"no-such-command"}) == 1);
  CHECK(run({"kg-stats", "--kg", tmp.path("kg.tsv").c_str(), "--bogus-flag"}) == 1);
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("malformed inputs exit with code 2") {
  testutil::TempDir tmp("cli_bad");
  testutil::write_file(tmp.path("kg.tsv"), "only two\tfields\nmissing\n");
  CHECK(run({"kg-stats", "--kg", tmp.path("kg.tsv").c_str()}) == 2);
}

TEST_CASE("gen-synthetic writes a trainable corpus and build-graphs cross-checks") {
  testutil::TempDir tmp("cli_gen");
  const std::string out = tmp.path("corpus");
  CHECK(run({"gen-synthetic", "--seed", "3", "--out", out.c_str(), "--train-n",
             "30", "--dev-n", "10", "--vocab", "24", "--emb-dim", "6"}) == 0);
  for (const char* f : {"train.jsonl", "dev.jsonl", "kg.tsv", "word_emb.txt",
                        "concept_emb.txt", "config.json"})
    CHECK(std::filesystem::exists(out + "/" + f));

  // build-graphs over the generated corpus; averages from the written file
  // must match avg_graph_size.
  const std::string graphs = tmp.path("graphs.jsonl");
  CHECK(run({"build-graphs", "--kg", (out + "/kg.tsv").c_str(), "--dataset",
             (out + "/dev.jsonl").c_str(), "--strategy", "one_hop", "--out",
             graphs.c_str()}) == 0);
  std::ifstream in(graphs);
  double prem_total = 0.0, hyp_total = 0.0;
  int n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    prem_total += j["premise"]["concepts"].size();
    hyp_total += j["hypothesis"]["concepts"].size();
    ++n;
  }
  REQUIRE(n == 10);
  const KnowledgeGraph kg = KnowledgeGraph::load_triples(out + "/kg.tsv");
  const auto pairs = load_dataset(out + "/dev.jsonl");
  const GraphSizeReport expect = avg_graph_size(pairs, kg, GraphStrategy::one_hop);
  CHECK(prem_total / n == doctest::Approx(expect.avg_premise_vertices));
  CHECK(hyp_total / n == doctest::Approx(expect.avg_hypothesis_vertices));
}

TEST_CASE("train, eval, and predict round trip through the CLI") {
  testutil::TempDir tmp("cli_train");
  const std::string out = tmp.path("corpus");
  REQUIRE(run({"gen-synthetic", "--seed", "4", "--out", out.c_str(), "--train-n",
               "40", "--dev-n", "12", "--vocab", "24", "--emb-dim", "6"}) == 0);

  // Shrink the model and epochs so the test stays quick.
  RunConfig cfg = RunConfig::load(out + "/config.json");
  cfg.model.hidden = 4;
  cfg.model.proj_dim = 4;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 10;
  cfg.train.graph_model = GraphModelKind::gconattn;
  cfg.paths.test = cfg.paths.dev;
  cfg.save(out + "/config.json");

  CHECK(run({"train", "--config", (out + "/config.json").c_str()}) == 0);
  CHECK(std::filesystem::exists(out + "/model.ckpt"));
  CHECK(std::filesystem::exists(out + "/model.ckpt.best"));
  CHECK(std::filesystem::exists(out + "/model.ckpt.history.tsv"));

  // The checkpoint echoes the config it was trained with.
  Checkpoint ck = Checkpoint::load(out + "/model.ckpt");
  CHECK(RunConfig::from_json(ck.config_json) == cfg);

  CHECK(run({"eval", "--config", (out + "/config.json").c_str(), "--checkpoint",
             (out + "/model.ckpt").c_str(), "--mode", "merged", "--oracle",
             "--split", "dev"}) == 0);
  CHECK(run({"eval", "--config", (out + "/config.json").c_str(), "--checkpoint",
             (out + "/model.ckpt").c_str(), "--mode", "graph"}) == 0);
  CHECK(run({"eval", "--config", (out + "/config.json").c_str(), "--checkpoint",
             (out + "/model.ckpt").c_str(), "--mode", "nope"}) == 1);

  CHECK(run({"predict", "--checkpoint", (out + "/model.ckpt").c_str(),
             "--premise", "w000 w003 w006", "--hypothesis", "w001"}) == 0);
  CHECK(run({"predict", "--checkpoint", tmp.path("missing.ckpt").c_str(),
             "--premise", "a", "--hypothesis", "b"}) == 1);

  // Embedding overrides: same file through the flag works, a bad path is a
  // usage error.
  CHECK(run({"eval", "--config", (out + "/config.json").c_str(), "--checkpoint",
             (out + "/model.ckpt").c_str(), "--word-emb",
             (out + "/word_emb.txt").c_str()}) == 0);
  CHECK(run({"eval", "--config", (out + "/config.json").c_str(), "--checkpoint",
             (out + "/model.ckpt").c_str(), "--word-emb",
             tmp.path("nope.txt").c_str()}) == 1);
}

TEST_CASE("two identical train runs write identical files") {
  testutil::TempDir tmp("cli_det");
  const std::string out = tmp.path("corpus");
  REQUIRE(run({"gen-synthetic", "--seed", "5", "--out", out.c_str(), "--train-n",
               "24", "--dev-n", "8", "--vocab", "24", "--emb-dim", "6"}) == 0);
  RunConfig cfg = RunConfig::load(out + "/config.json");
  cfg.model.hidden = 4;
  cfg.model.proj_dim = 4;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 8;
  cfg.train.graph_model = GraphModelKind::gmatch;
  cfg.save(out + "/config.json");

  REQUIRE(run({"train", "--config", (out + "/config.json").c_str()}) == 0);
  const std::string ckpt1 = testutil::read_file(out + "/model.ckpt");
  const std::string hist1 = testutil::read_file(out + "/model.ckpt.history.tsv");
  REQUIRE(run({"train", "--config", (out + "/config.json").c_str()}) == 0);
  CHECK(testutil::read_file(out + "/model.ckpt") == ckpt1);
  CHECK(testutil::read_file(out + "/model.ckpt.history.tsv") == hist1);
}
