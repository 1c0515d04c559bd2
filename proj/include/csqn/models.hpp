#pragma once

#include <optional>
#include <span>
#include <string>

#include "csqn/data.hpp"
#include "csqn/nn.hpp"

namespace csqn {

enum class GraphModelKind { gmatch, gconattn, none };

const char* graph_model_str(GraphModelKind k);
GraphModelKind parse_graph_model(const std::string& s);

struct ModelDims {
  int word_dim = 16;
  int concept_dim = 16;
  int hidden = 32;    // every GRU
  int proj_dim = 16;  // GconAttn matcher output width
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct TextModelParams {
  BiGruParams context;  // shared by premise and hypothesis
  BiGruParams matcher;
};

struct GmatchParams {
  BiGruParams context;
  BiGruParams matcher;
};

struct GconAttnParams {
  FeedForwardParams matcher;  // projection applied to both sides
};

struct MergedModelParams {
  ModelDims dims;
  GraphModelKind graph_model = GraphModelKind::none;
  TextModelParams text;
  std::optional<GmatchParams> gmatch;
  std::optional<GconAttnParams> gconattn;
  FeedForwardParams classifier;
  Tensor sentinel;  // [concept_dim] stand-in for an empty concept graph

  int text_out_dim() const { return 2 * dims.hidden; }
  int graph_out_dim() const;
};

/// Registers all parameters in `store` (Xavier-uniform weights, zero biases,
/// deterministic in `seed`) and returns the handles.
MergedModelParams build_merged_model(ParamStore& store, const ModelDims& dims,
                                     GraphModelKind graph_model, uint64_t seed);

struct AlignResult {
  Tensor scores;   // E [K x J], dot products
  Tensor aligned;  // alpha [J x d], premise mixture per hypothesis position
};

/// E_ij = p_i . h_j; alpha_j normalizes over the premise positions.
AlignResult attention_align(const Tensor& premise, const Tensor& hypothesis);

/// softmax over each score row, then mixes `values`: [n x m] x [m x d].
Tensor attend_rows(const Tensor& scores, const Tensor& values);

/// [h; a; h - a; h . a]
Tensor matcher_features(const Tensor& h, const Tensor& a);

/// Encode both sides, align, matcher-BiGRU over hypothesis positions,
/// column-wise max over matching states.
Tensor text_match_forward(const TextModelParams& p,
                          std::span<const Tensor> premise,
                          std::span<const Tensor> hypothesis);

/// Same pipeline over ordered concept embeddings; an empty side becomes the
/// one-element sentinel sequence.
Tensor gmatch_forward(const GmatchParams& p, const Tensor& sentinel,
                      std::span<const Tensor> premise_concepts,
                      std::span<const Tensor> hypothesis_concepts);

/// Two-way attention directly over concept embeddings, projection matcher,
/// then [p_max; p_avg; h_max; h_avg].
Tensor gconattn_forward(const GconAttnParams& p, const Tensor& sentinel,
                        std::span<const Tensor> premise_concepts,
                        std::span<const Tensor> hypothesis_concepts);

/// Classifier over [x_text; x_graph]; logit 0 is neutral, logit 1 entails.
/// Either side may be undefined when the model runs text-only/graph-only.
Tensor merged_predict(const MergedModelParams& p, const Tensor& x_text,
                      const Tensor& x_graph);

struct Classification {
  Label label = Label::neutral;
  double probability = 0.0;  // probability of the chosen label
};

/// Softmax + argmax; an exact tie is neutral.
Classification classify(const Tensor& logits);

}  // namespace csqn
