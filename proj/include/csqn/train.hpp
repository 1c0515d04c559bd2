#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csqn/checkpoint.hpp"
#include "csqn/embeddings.hpp"
#include "csqn/kg.hpp"
#include "csqn/models.hpp"

namespace csqn {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 40;
  int epochs = 20;
  uint64_t seed = 7;
  double adagrad_epsilon = 1e-10;
  GraphStrategy graph_strategy = GraphStrategy::concepts_only;
  GraphModelKind graph_model = GraphModelKind::gmatch;
  double stop_at_dev_accuracy = 0.0;  // 0 disables the early exit

  void validate() const;  // learning_rate > 0, batch_size >= 1, ...
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Per-parameter accumulator of squared gradients; entries only grow.
struct AdagradState {
  std::map<std::string, std::vector<double>> accum;
};

/// G += g^2; theta -= lr * g / (sqrt(G) + eps).  Every parameter must carry a
/// gradient buffer (zero-filled counts), otherwise StateError.
void adagrad_step(AdagradState& state, ParamStore& params, double lr, double eps);

/// -log softmax(logits)[label], stabilized.  label is 0 (neutral) or 1
/// (entails); anything else is domain_error.
Tensor cross_entropy_loss(const Tensor& logits, int label);

enum class EvalMode { merged, text_only, graph_only };

/// Everything a forward pass needs for one pair, computed once: embedded
/// token sequences, concept graphs, and embedded concept sequences (Gmatch
/// order for gmatch, vertex order otherwise).
struct PreparedExample {
  std::vector<Tensor> premise_words, hypothesis_words;
  std::vector<Tensor> premise_concepts, hypothesis_concepts;
  ConceptGraph premise_graph, hypothesis_graph;
  int label = 0;
};

PreparedExample prepare_example(const ExamplePair& pair, const KnowledgeGraph& kg,
                                const EmbeddingTable& word_emb,
                                const EmbeddingTable& concept_emb,
                                GraphStrategy strategy, GraphModelKind graph_model,
                                bool strip_punctuation = true);

std::vector<PreparedExample> prepare_dataset(std::span<const ExamplePair> pairs,
                                             const KnowledgeGraph& kg,
                                             const EmbeddingTable& word_emb,
                                             const EmbeddingTable& concept_emb,
                                             GraphStrategy strategy,
                                             GraphModelKind graph_model,
                                             bool strip_punctuation = true);

/// Full forward pass to 2 logits.  text_only/graph_only replace the other
/// branch's pooled vector with zeros before the shared classifier.
Tensor model_logits(const MergedModelParams& model, const PreparedExample& ex,
                    EvalMode mode = EvalMode::merged);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::optional<double> text_accuracy;
  std::optional<double> graph_accuracy;
  std::optional<double> oracle_accuracy;
};

EvalReport evaluate(const MergedModelParams& model,
                    std::span<const PreparedExample> dataset, EvalMode mode,
                    bool with_oracle = false);

/// Fraction of examples where the text OR the graph prediction is correct.
double oracle_accuracy(std::span<const int> text_preds,
                       std::span<const int> graph_preds, std::span<const int> labels);

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainOutput {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;  // highest dev accuracy seen
  std::vector<EpochStats> history;
  int optimizer_steps = 0;
};

/// Joint training: one cross-entropy loss through the merged classifier,
/// seeded shuffling, fixed-size batches with the last partial batch kept,
/// one Adagrad step per batch.  Deterministic given the seed.
TrainOutput train(std::span<const ExamplePair> train_pairs,
                  std::span<const ExamplePair> dev_pairs, const KnowledgeGraph& kg,
                  const EmbeddingTable& word_emb, const EmbeddingTable& concept_emb,
                  const ModelDims& dims, const TrainConfig& cfg,
                  const std::string& config_echo = "{}",
                  bool strip_punctuation = true);

/// One `epoch<TAB>train_loss<TAB>dev_accuracy` line per epoch, full
/// double precision.
void write_history(const std::string& path, std::span<const EpochStats> history);

}  // namespace csqn
