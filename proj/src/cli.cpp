#include "csqn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csqn/config.hpp"
#include "csqn/errors.hpp"
#include "csqn/synthetic.hpp"
#include "csqn/train.hpp"

namespace csqn {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError("config is missing a path for " + what);
  if (!fs::exists(path)) throw UsageError(what + " file does not exist: " + path);
}

struct World {
  KnowledgeGraph kg;
  EmbeddingTable word_emb;
  EmbeddingTable concept_emb;
};

World load_world(const RunConfig& cfg) {
  require_file(cfg.paths.kg, "kg");
  require_file(cfg.paths.word_emb, "word_emb");
  require_file(cfg.paths.concept_emb, "concept_emb");
  return {KnowledgeGraph::load_triples(cfg.paths.kg),
          EmbeddingTable::load(cfg.paths.word_emb, cfg.model.word_dim,
                               cfg.train.seed),
          EmbeddingTable::load(cfg.paths.concept_emb, cfg.model.concept_dim,
                               cfg.train.seed + 1)};
}

struct LoadedModel {
  RunConfig cfg;  // from the checkpoint echo
  ParamStore store;
  MergedModelParams model;
};

LoadedModel model_from_checkpoint(const Checkpoint& ck) {
  LoadedModel lm{RunConfig::from_json(ck.config_json), {}, {}};
  lm.model = build_merged_model(lm.store, lm.cfg.model, lm.cfg.train.graph_model,
                                lm.cfg.train.seed);
  ck.apply_to(lm.store);
  return lm;
}

void print_concept_graph(const KnowledgeGraph& kg, const ConceptGraph& g,
                         const std::string& name) {
  std::printf("%s graph: %d concepts, %d edges\n", name.c_str(),
              static_cast<int>(g.vertices.size()), static_cast<int>(g.edges.size()));
  for (int v : g.vertices) {
    std::printf("  concept \"%s\"", kg.concept_label(v).c_str());
    auto it = g.origin_spans.find(v);
    if (it != g.origin_spans.end()) {
      for (const SpanRange& s : it->second) std::printf(" tokens %d-%d", s.start, s.end);
    }
    std::printf("\n");
  }
  for (const KgEdge& e : g.edges)
    std::printf("  edge \"%s\" -[%s]-> \"%s\"\n", kg.concept_label(e.head).c_str(),
                kg.relation_label(e.relation).c_str(),
                kg.concept_label(e.tail).c_str());
}

json graph_to_json(const KnowledgeGraph& kg, const ConceptGraph& g) {
  json concepts = json::array();
  for (int v : g.vertices) concepts.push_back(kg.concept_label(v));
  json edges = json::array();
  for (const KgEdge& e : g.edges)
    edges.push_back({kg.concept_label(e.head), kg.relation_label(e.relation),
                     kg.concept_label(e.tail)});
  return {{"concepts", concepts}, {"edges", edges}};
}

int cmd_kg_stats(const std::string& kg_path) {
  const KnowledgeGraph kg = KnowledgeGraph::load_triples(kg_path);
  const KgStats s = kg_stats(kg);
  std::printf("concepts\t%lld\n", static_cast<long long>(s.concepts));
  std::printf("relations\t%lld\n", static_cast<long long>(s.relations));
  std::printf("facts\t%lld\n", static_cast<long long>(s.facts));
  return 0;
}

int cmd_gen_synthetic(uint64_t seed, const std::string& out_dir, int n_train,
                      int n_dev, int vocab, int emb_dim) {
  fs::create_directories(out_dir);
  const SyntheticCorpus corpus = gen_synthetic(seed, n_train, n_dev, vocab, emb_dim);

  save_dataset(out_dir + "/train.jsonl", corpus.train);
  save_dataset(out_dir + "/dev.jsonl", corpus.dev);
  {
    std::ofstream kg_out(out_dir + "/kg.tsv");
    if (!kg_out) throw std::runtime_error("cannot write " + out_dir + "/kg.tsv");
    for (const Triple& t : corpus.kg_triples)
      kg_out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
  corpus.word_embeddings.save(out_dir + "/word_emb.txt");
  corpus.concept_embeddings.save(out_dir + "/concept_emb.txt");

  RunConfig cfg;
  cfg.paths.train = out_dir + "/train.jsonl";
  cfg.paths.dev = out_dir + "/dev.jsonl";
  cfg.paths.kg = out_dir + "/kg.tsv";
  cfg.paths.word_emb = out_dir + "/word_emb.txt";
  cfg.paths.concept_emb = out_dir + "/concept_emb.txt";
  cfg.paths.checkpoint = out_dir + "/model.ckpt";
  cfg.model.word_dim = emb_dim;
  cfg.model.concept_dim = emb_dim;
  cfg.train.seed = seed;
  cfg.save(out_dir + "/config.json");

  std::printf("wrote %d train / %d dev pairs, %d kg triples, vocab %d to %s\n",
              n_train, n_dev, static_cast<int>(corpus.kg_triples.size()), vocab,
              out_dir.c_str());
  return 0;
}

int cmd_build_graphs(const std::string& kg_path, const std::string& dataset_path,
                     const std::string& strategy_name, const std::string& out_path) {
  const GraphStrategy strategy = parse_graph_strategy(strategy_name);
  const KnowledgeGraph kg = KnowledgeGraph::load_triples(kg_path);
  const std::vector<ExamplePair> pairs = load_dataset(dataset_path);
  if (pairs.empty()) throw std::domain_error("build-graphs: empty dataset");

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  for (const ExamplePair& pair : pairs) {
    const ConceptGraph pg =
        build_graph(strategy, kg, match_concepts(tokenize(pair.premise), kg));
    const ConceptGraph hg =
        build_graph(strategy, kg, match_concepts(tokenize(pair.hypothesis), kg));
    json record = {{"premise", graph_to_json(kg, pg)},
                   {"hypothesis", graph_to_json(kg, hg)}};
    out << record.dump() << '\n';
  }
  const GraphSizeReport sizes = avg_graph_size(pairs, kg, strategy);
  std::printf("strategy\t%s\n", graph_strategy_str(strategy));
  std::printf("avg premise concepts\t%.1f\n", sizes.avg_premise_vertices);
  std::printf("avg hypothesis concepts\t%.1f\n", sizes.avg_hypothesis_vertices);
  return 0;
}

struct EmbOverrides {
  std::string word_emb, concept_emb;
  int emb_dim = 0;

  void apply(RunConfig& cfg) const {
    if (!word_emb.empty()) cfg.paths.word_emb = word_emb;
    if (!concept_emb.empty()) cfg.paths.concept_emb = concept_emb;
    if (emb_dim > 0) {
      cfg.model.word_dim = emb_dim;
      cfg.model.concept_dim = emb_dim;
    }
  }
};

int cmd_train(const std::string& config_path, const EmbOverrides& emb) {
  RunConfig cfg = RunConfig::load(config_path);
  emb.apply(cfg);
  require_file(cfg.paths.train, "train dataset");
  require_file(cfg.paths.dev, "dev dataset");
  if (cfg.paths.checkpoint.empty())
    throw UsageError("config is missing paths.checkpoint");
  const World world = load_world(cfg);
  const std::vector<ExamplePair> train_pairs = load_dataset(cfg.paths.train);
  const std::vector<ExamplePair> dev_pairs = load_dataset(cfg.paths.dev);

  const TrainOutput out =
      train(train_pairs, dev_pairs, world.kg, world.word_emb, world.concept_emb,
            cfg.model, cfg.train, cfg.to_json(), cfg.strip_punctuation);

  for (const EpochStats& e : out.history)
    std::printf("epoch %d\ttrain_loss %.4f\tdev_acc %.4f\n", e.epoch, e.train_loss,
                e.dev_accuracy);
  out.final_checkpoint.save(cfg.paths.checkpoint);
  out.best_checkpoint.save(cfg.paths.checkpoint + ".best");
  write_history(cfg.history_path(), out.history);
  std::printf("checkpoint: %s\n", cfg.paths.checkpoint.c_str());
  std::printf("history: %s\n", cfg.history_path().c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_path,
             const std::string& mode_name, bool with_oracle,
             const std::string& split, const EmbOverrides& emb) {
  const RunConfig paths_cfg = RunConfig::load(config_path);
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  LoadedModel lm = model_from_checkpoint(ck);
  // Paths come from the command's config; the model and its training-time
  // settings come from the checkpoint echo.  Embedding-table dimensions are
  // fixed by the trained model, so only path overrides apply here.
  RunConfig cfg = lm.cfg;
  cfg.paths = paths_cfg.paths;
  EmbOverrides paths_only = emb;
  paths_only.emb_dim = 0;
  paths_only.apply(cfg);

  std::string data_path;
  if (split == "train")
    data_path = cfg.paths.train;
  else if (split == "dev")
    data_path = cfg.paths.dev;
  else if (split == "test")
    data_path = cfg.paths.test;
  else
    throw UsageError("unknown split '" + split + "' (train|dev|test)");
  require_file(data_path, split + " dataset");

  EvalMode mode = EvalMode::merged;
  if (mode_name == "merged")
    mode = EvalMode::merged;
  else if (mode_name == "text")
    mode = EvalMode::text_only;
  else if (mode_name == "graph")
    mode = EvalMode::graph_only;
  else
    throw UsageError("unknown mode '" + mode_name + "' (merged|text|graph)");

  const World world = load_world(cfg);
  const std::vector<ExamplePair> pairs = load_dataset(data_path);
  const std::vector<PreparedExample> prepared =
      prepare_dataset(pairs, world.kg, world.word_emb, world.concept_emb,
                      cfg.train.graph_strategy, cfg.train.graph_model,
                      cfg.strip_punctuation);
  const EvalReport report = evaluate(lm.model, prepared, mode, with_oracle);

  std::printf("examples\t%d\n", static_cast<int>(pairs.size()));
  std::printf("accuracy\t%.4f\n", report.accuracy);
  if (report.text_accuracy) std::printf("text_accuracy\t%.4f\n", *report.text_accuracy);
  if (report.graph_accuracy)
    std::printf("graph_accuracy\t%.4f\n", *report.graph_accuracy);
  if (report.oracle_accuracy)
    std::printf("oracle_accuracy\t%.4f\n", *report.oracle_accuracy);
  return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& premise,
                const std::string& hypothesis) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  LoadedModel lm = model_from_checkpoint(ck);
  const World world = load_world(lm.cfg);

  ExamplePair pair{premise, hypothesis, Label::neutral};
  const PreparedExample ex =
      prepare_example(pair, world.kg, world.word_emb, world.concept_emb,
                      lm.cfg.train.graph_strategy, lm.cfg.train.graph_model,
                      lm.cfg.strip_punctuation);
  const Classification c = classify(model_logits(lm.model, ex));

  std::printf("label: %s\n", label_str(c.label));
  std::printf("probability: %.4f\n", c.probability);
  print_concept_graph(world.kg, ex.premise_graph, "premise");
  print_concept_graph(world.kg, ex.hypothesis_graph, "hypothesis");
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"conseqnet: textual entailment with knowledge-graph support"};
  app.require_subcommand(1);

  // kg-stats
  std::string kg_path;
  auto* kg_cmd = app.add_subcommand("kg-stats", "print concept/relation/fact counts");
  kg_cmd->add_option("kg,--kg", kg_path, "triple file")
      ->required()
      ->check(CLI::ExistingFile);

  // gen-synthetic
  uint64_t seed = 7;
  std::string out_dir = "synthetic";
  int n_train = 2000, n_dev = 500, vocab = 60, emb_dim = 16;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic corpus");
  gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_option("--out", out_dir, "output directory")->required();
  gen_cmd->add_option("--train-n", n_train, "training pairs");
  gen_cmd->add_option("--dev-n", n_dev, "dev pairs");
  gen_cmd->add_option("--vocab", vocab, "vocabulary size (>= 10)");
  gen_cmd->add_option("--emb-dim", emb_dim, "embedding dimension");

  // build-graphs
  std::string bg_kg, bg_dataset, bg_strategy = "concepts_only", bg_out;
  auto* bg_cmd =
      app.add_subcommand("build-graphs", "write per-pair concept graphs");
  bg_cmd->add_option("--kg", bg_kg, "triple file")->required()->check(CLI::ExistingFile);
  bg_cmd->add_option("--dataset", bg_dataset, "dataset file")
      ->required()
      ->check(CLI::ExistingFile);
  bg_cmd->add_option("--strategy", bg_strategy, "concepts_only|one_hop|two_hop");
  bg_cmd->add_option("--out", bg_out, "output JSONL file")->required();

  // train
  std::string train_config;
  EmbOverrides train_emb;
  auto* train_cmd = app.add_subcommand("train", "train and write checkpoints");
  train_cmd->add_option("--config", train_config, "config file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--word-emb", train_emb.word_emb,
                        "override word embedding file");
  train_cmd->add_option("--concept-emb", train_emb.concept_emb,
                        "override concept embedding file");
  train_cmd->add_option("--emb-dim", train_emb.emb_dim,
                        "override both embedding dimensions");

  // eval
  std::string eval_config, eval_ckpt, eval_mode = "merged", eval_split = "dev";
  bool eval_oracle = false;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--config", eval_config, "config file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--mode", eval_mode, "merged|text|graph");
  eval_cmd->add_flag("--oracle", eval_oracle, "also report text/graph/oracle accuracy");
  eval_cmd->add_option("--split", eval_split, "train|dev|test");
  EmbOverrides eval_emb;
  eval_cmd->add_option("--word-emb", eval_emb.word_emb,
                       "override word embedding file");
  eval_cmd->add_option("--concept-emb", eval_emb.concept_emb,
                       "override concept embedding file");

  // predict
  std::string pred_ckpt, pred_premise, pred_hypothesis;
  auto* pred_cmd = app.add_subcommand("predict", "classify one pair");
  pred_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  pred_cmd->add_option("--premise", pred_premise, "premise text")->required();
  pred_cmd->add_option("--hypothesis", pred_hypothesis, "hypothesis text")->required();

  try {
    app.parse(argc, argv);
    if (kg_cmd->parsed()) return cmd_kg_stats(kg_path);
    if (gen_cmd->parsed())
      return cmd_gen_synthetic(seed, out_dir, n_train, n_dev, vocab, emb_dim);
    if (bg_cmd->parsed())
      return cmd_build_graphs(bg_kg, bg_dataset, bg_strategy, bg_out);
    if (train_cmd->parsed()) return cmd_train(train_config, train_emb);
    if (eval_cmd->parsed())
      return cmd_eval(eval_config, eval_ckpt, eval_mode, eval_oracle, eval_split,
                      eval_emb);
    if (pred_cmd->parsed())
      return cmd_predict(pred_ckpt, pred_premise, pred_hypothesis);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace csqn
