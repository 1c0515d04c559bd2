#include "csqn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "csqn/errors.hpp"

namespace csqn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::domain_error("train config: learning_rate must be positive");
  if (batch_size < 1) throw std::domain_error("train config: batch_size must be >= 1");
  if (epochs < 1) throw std::domain_error("train config: epochs must be >= 1");
  if (!(adagrad_epsilon > 0.0))
    throw std::domain_error("train config: adagrad_epsilon must be positive");
  if (graph_model == GraphModelKind::gmatch &&
      graph_strategy != GraphStrategy::concepts_only)
    throw std::domain_error(
        "train config: gmatch orders concepts by text position and only accepts "
        "the concepts_only strategy");
}

void adagrad_step(AdagradState& state, ParamStore& params, double lr, double eps) {
  for (auto& [name, t] : params) {
    if (!t.has_grad())
      throw StateError("adagrad_step: parameter '" + name + "' has no gradient");
    const std::vector<double>& g = t.grad();
    std::vector<double>& acc = state.accum[name];
    if (acc.empty()) acc.assign(g.size(), 0.0);
    std::vector<double>& v = t.mutable_values();
    for (size_t i = 0; i < g.size(); ++i) {
      acc[i] += g[i] * g[i];
      v[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
    }
  }
}

Tensor cross_entropy_loss(const Tensor& logits, int label) {
  if (logits.rank() != 1 || logits.dim(0) != 2)
    throw DimensionError("cross_entropy_loss: expects two logits, got " +
                         shape_str(logits.shape()));
  if (label != 0 && label != 1)
    throw std::domain_error("cross_entropy_loss: label must be 0 or 1, got " +
                            std::to_string(label));
  for (double v : logits.values())
    if (!std::isfinite(v))
      throw std::domain_error("cross_entropy_loss: non-finite logits");
  // log-sum-exp with the max detached as a plain constant keeps the gradient
  // exact and the exponentials bounded.
  const double m = std::max(logits.value(0), logits.value(1));
  Tensor lse = add_const(log(reduce_sum(exp(add_const(logits, -m)), 0)), m);
  return sub(lse, at(logits, label));
}

static Tensor embed_const(const EmbeddingTable& table, const std::string& key) {
  return Tensor({table.dim()}, table.lookup(key));
}

// Embedding-file keys cannot contain whitespace, so multi-word concept labels
// are conventionally distributed with underscores ("solar_panel").
static std::string concept_key(const std::string& label) {
  std::string key = label;
  for (char& c : key)
    if (c == ' ') c = '_';
  return key;
}

PreparedExample prepare_example(const ExamplePair& pair, const KnowledgeGraph& kg,
                                const EmbeddingTable& word_emb,
                                const EmbeddingTable& concept_emb,
                                GraphStrategy strategy, GraphModelKind graph_model,
                                bool strip_punctuation) {
  PreparedExample ex;
  ex.label = static_cast<int>(pair.label);

  const std::vector<std::string> ptoks = tokenize(pair.premise, strip_punctuation);
  const std::vector<std::string> htoks = tokenize(pair.hypothesis, strip_punctuation);
  if (ptoks.empty()) throw std::domain_error("prepare_example: premise has no tokens");
  if (htoks.empty())
    throw std::domain_error("prepare_example: hypothesis has no tokens");
  for (const std::string& t : ptoks)
    ex.premise_words.push_back(embed_const(word_emb, t));
  for (const std::string& t : htoks)
    ex.hypothesis_words.push_back(embed_const(word_emb, t));

  const std::vector<MatchSpan> pspans = match_concepts(ptoks, kg);
  const std::vector<MatchSpan> hspans = match_concepts(htoks, kg);
  ex.premise_graph = build_graph(strategy, kg, pspans);
  ex.hypothesis_graph = build_graph(strategy, kg, hspans);

  auto concept_seq = [&](const ConceptGraph& g) {
    std::vector<int> ids = graph_model == GraphModelKind::gmatch
                               ? order_concepts(kg, g)
                               : g.vertices;
    std::vector<Tensor> seq;
    seq.reserve(ids.size());
    for (int id : ids)
      seq.push_back(embed_const(concept_emb, concept_key(kg.concept_label(id))));
    return seq;
  };
  if (graph_model != GraphModelKind::none) {
    ex.premise_concepts = concept_seq(ex.premise_graph);
    ex.hypothesis_concepts = concept_seq(ex.hypothesis_graph);
  }
  return ex;
}

std::vector<PreparedExample> prepare_dataset(std::span<const ExamplePair> pairs,
                                             const KnowledgeGraph& kg,
                                             const EmbeddingTable& word_emb,
                                             const EmbeddingTable& concept_emb,
                                             GraphStrategy strategy,
                                             GraphModelKind graph_model,
                                             bool strip_punctuation) {
  std::vector<PreparedExample> out;
  out.reserve(pairs.size());
  for (const ExamplePair& p : pairs)
    out.push_back(prepare_example(p, kg, word_emb, concept_emb, strategy,
                                  graph_model, strip_punctuation));
  return out;
}

Tensor model_logits(const MergedModelParams& model, const PreparedExample& ex,
                    EvalMode mode) {
  Tensor x_text, x_graph;
  const bool has_graph = model.graph_model != GraphModelKind::none;
  if (!has_graph && mode == EvalMode::graph_only)
    throw StateError("model_logits: graph_only mode on a text-only model");

  if (mode != EvalMode::graph_only)
    x_text = text_match_forward(model.text, ex.premise_words, ex.hypothesis_words);
  else
    x_text = Tensor::zeros({model.text_out_dim()});

  if (has_graph) {
    if (mode != EvalMode::text_only) {
      if (model.graph_model == GraphModelKind::gmatch)
        x_graph = gmatch_forward(*model.gmatch, model.sentinel, ex.premise_concepts,
                                 ex.hypothesis_concepts);
      else
        x_graph = gconattn_forward(*model.gconattn, model.sentinel,
                                   ex.premise_concepts, ex.hypothesis_concepts);
    } else {
      x_graph = Tensor::zeros({model.graph_out_dim()});
    }
  }
  return merged_predict(model, x_text, x_graph);
}

static double accuracy_of(std::span<const int> preds, std::span<const int> labels) {
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

EvalReport evaluate(const MergedModelParams& model,
                    std::span<const PreparedExample> dataset, EvalMode mode,
                    bool with_oracle) {
  if (dataset.empty()) throw std::domain_error("evaluate: empty dataset");
  EvalReport report;
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const PreparedExample& ex : dataset) {
    report.predictions.push_back(
        static_cast<int>(classify(model_logits(model, ex, mode)).label));
    labels.push_back(ex.label);
  }
  report.accuracy = accuracy_of(report.predictions, labels);
  if (with_oracle) {
    std::vector<int> text_preds, graph_preds;
    for (const PreparedExample& ex : dataset) {
      text_preds.push_back(static_cast<int>(
          classify(model_logits(model, ex, EvalMode::text_only)).label));
      graph_preds.push_back(static_cast<int>(
          classify(model_logits(model, ex, EvalMode::graph_only)).label));
    }
    report.text_accuracy = accuracy_of(text_preds, labels);
    report.graph_accuracy = accuracy_of(graph_preds, labels);
    report.oracle_accuracy = oracle_accuracy(text_preds, graph_preds, labels);
  }
  return report;
}

double oracle_accuracy(std::span<const int> text_preds,
                       std::span<const int> graph_preds,
                       std::span<const int> labels) {
  if (text_preds.size() != labels.size() || graph_preds.size() != labels.size())
    throw std::domain_error("oracle_accuracy: prediction/label lengths disagree");
  if (labels.empty()) throw std::domain_error("oracle_accuracy: empty input");
  int correct = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (text_preds[i] == labels[i] || graph_preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// Fisher-Yates with an explicit modulo draw; std::shuffle's draw sequence is
// implementation-defined and run-to-run determinism is a contract here.
static void deterministic_shuffle(std::vector<int>& idx, std::mt19937_64& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

TrainOutput train(std::span<const ExamplePair> train_pairs,
                  std::span<const ExamplePair> dev_pairs, const KnowledgeGraph& kg,
                  const EmbeddingTable& word_emb, const EmbeddingTable& concept_emb,
                  const ModelDims& dims, const TrainConfig& cfg,
                  const std::string& config_echo, bool strip_punctuation) {
  cfg.validate();
  if (train_pairs.empty()) throw std::domain_error("train: empty training dataset");
  if (dev_pairs.empty()) throw std::domain_error("train: empty dev dataset");

  ParamStore store;
  MergedModelParams model = build_merged_model(store, dims, cfg.graph_model, cfg.seed);
  const std::vector<PreparedExample> train_set =
      prepare_dataset(train_pairs, kg, word_emb, concept_emb, cfg.graph_strategy,
                      cfg.graph_model, strip_punctuation);
  const std::vector<PreparedExample> dev_set =
      prepare_dataset(dev_pairs, kg, word_emb, concept_emb, cfg.graph_strategy,
                      cfg.graph_model, strip_punctuation);

  AdagradState opt;
  std::mt19937_64 shuffle_rng(cfg.seed);
  TrainOutput out;
  double best_acc = -1.0;

  std::vector<int> idx(train_set.size());
  std::iota(idx.begin(), idx.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    deterministic_shuffle(idx, shuffle_rng);
    double loss_sum = 0.0;
    for (size_t start = 0; start < idx.size(); start += cfg.batch_size) {
      const size_t end = std::min(idx.size(), start + cfg.batch_size);
      store.zero_grad();
      Tensor batch_loss;
      for (size_t k = start; k < end; ++k) {
        const PreparedExample& ex = train_set[static_cast<size_t>(idx[k])];
        Tensor loss = cross_entropy_loss(model_logits(model, ex), ex.label);
        batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
      }
      const double bn = static_cast<double>(end - start);
      batch_loss = scale(batch_loss, 1.0 / bn);
      backward(batch_loss);
      adagrad_step(opt, store, cfg.learning_rate, cfg.adagrad_epsilon);
      ++out.optimizer_steps;
      loss_sum += batch_loss.scalar_value() * bn;
    }
    const double train_loss = loss_sum / static_cast<double>(train_set.size());
    const double dev_acc = evaluate(model, dev_set, EvalMode::merged).accuracy;
    out.history.push_back({epoch, train_loss, dev_acc});
    if (dev_acc > best_acc) {
      best_acc = dev_acc;
      out.best_checkpoint = Checkpoint::from_store(store, config_echo);
    }
    if (cfg.stop_at_dev_accuracy > 0.0 && dev_acc >= cfg.stop_at_dev_accuracy) break;
  }
  out.final_checkpoint = Checkpoint::from_store(store, config_echo);
  return out;
}

void write_history(const std::string& path, std::span<const EpochStats> history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write history file: " + path);
  char buf[128];
  for (const EpochStats& e : history) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\n", e.epoch, e.train_loss,
                  e.dev_accuracy);
    out << buf;
  }
}

}  // namespace csqn
