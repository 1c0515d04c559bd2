#include "csqn/models.hpp"

#include <algorithm>
#include <cmath>

#include "csqn/errors.hpp"

namespace csqn {

const char* graph_model_str(GraphModelKind k) {
  switch (k) {
    case GraphModelKind::gmatch:
      return "gmatch";
    case GraphModelKind::gconattn:
      return "gconattn";
    case GraphModelKind::none:
      return "none";
  }
  return "?";
}

GraphModelKind parse_graph_model(const std::string& s) {
  if (s == "gmatch") return GraphModelKind::gmatch;
  if (s == "gconattn") return GraphModelKind::gconattn;
  if (s == "none") return GraphModelKind::none;
  throw std::domain_error("unknown graph model '" + s + "'");
}

int MergedModelParams::graph_out_dim() const {
  switch (graph_model) {
    case GraphModelKind::gmatch:
      return 2 * dims.hidden;
    case GraphModelKind::gconattn:
      return 4 * dims.proj_dim;
    case GraphModelKind::none:
      return 0;
  }
  return 0;
}

MergedModelParams build_merged_model(ParamStore& store, const ModelDims& dims,
                                     GraphModelKind graph_model, uint64_t seed) {
  if (dims.word_dim <= 0 || dims.concept_dim <= 0 || dims.hidden <= 0 ||
      dims.proj_dim <= 0)
    throw DimensionError("build_merged_model: dimensions must be positive");
  ParamInit init(seed);
  MergedModelParams m;
  m.dims = dims;
  m.graph_model = graph_model;
  m.text.context = bigru_init(store, "text.context", dims.word_dim, dims.hidden, init);
  m.text.matcher =
      bigru_init(store, "text.matcher", 4 * 2 * dims.hidden, dims.hidden, init);
  if (graph_model == GraphModelKind::gmatch) {
    GmatchParams g;
    g.context =
        bigru_init(store, "graph.context", dims.concept_dim, dims.hidden, init);
    g.matcher =
        bigru_init(store, "graph.matcher", 4 * 2 * dims.hidden, dims.hidden, init);
    m.gmatch = std::move(g);
  } else if (graph_model == GraphModelKind::gconattn) {
    GconAttnParams g;
    const int dims_ffn[] = {4 * dims.concept_dim, dims.proj_dim};
    const Activation acts[] = {Activation::relu};
    g.matcher = ffn_init(store, "graph.matcher_ffn", dims_ffn, acts, init);
    m.gconattn = std::move(g);
  }
  if (graph_model != GraphModelKind::none) {
    m.sentinel = store.create("graph.sentinel", {dims.concept_dim},
                              init.uniform(dims.concept_dim, -0.1, 0.1));
  }
  const int cls_in = m.text_out_dim() + m.graph_out_dim();
  const int cls_hidden = std::max(8, cls_in / 2);
  const int cls_dims[] = {cls_in, cls_hidden, 2};
  const Activation cls_acts[] = {Activation::relu, Activation::identity};
  m.classifier = ffn_init(store, "classifier", cls_dims, cls_acts, init);
  return m;
}

Tensor attend_rows(const Tensor& scores, const Tensor& values) {
  return matmul(softmax_rows(scores), values);
}

AlignResult attention_align(const Tensor& premise, const Tensor& hypothesis) {
  if (premise.rank() != 2 || hypothesis.rank() != 2 ||
      premise.dim(1) != hypothesis.dim(1))
    throw DimensionError("attention_align: widths disagree: " +
                         shape_str(premise.shape()) + " vs " +
                         shape_str(hypothesis.shape()));
  Tensor scores = matmul(premise, transpose(hypothesis));  // [K x J]
  Tensor aligned = attend_rows(transpose(scores), premise);
  return {scores, aligned};
}

Tensor matcher_features(const Tensor& h, const Tensor& a) {
  if (h.shape() != a.shape())
    throw DimensionError("matcher_features: widths disagree: " +
                         shape_str(h.shape()) + " vs " + shape_str(a.shape()));
  const Tensor parts[] = {h, a, sub(h, a), mul(h, a)};
  return concat(parts, 0);
}

// Shared match-LSTM core: context-encode, align, matcher features per
// hypothesis position, matcher BiGRU, column-wise max pool.
static Tensor match_pipeline(const BiGruParams& context, const BiGruParams& matcher,
                             std::span<const Tensor> premise,
                             std::span<const Tensor> hypothesis) {
  const std::vector<Tensor> p_enc = bigru_encode(context, premise);
  const std::vector<Tensor> h_enc = bigru_encode(context, hypothesis);
  Tensor P = stack_rows(p_enc);
  Tensor H = stack_rows(h_enc);
  AlignResult align = attention_align(P, H);
  std::vector<Tensor> feats;
  feats.reserve(h_enc.size());
  for (size_t j = 0; j < h_enc.size(); ++j)
    feats.push_back(matcher_features(h_enc[j], row(align.aligned, static_cast<int>(j))));
  const std::vector<Tensor> states = bigru_encode(matcher, feats);
  return reduce_max(stack_rows(states), 0);
}

Tensor text_match_forward(const TextModelParams& p, std::span<const Tensor> premise,
                          std::span<const Tensor> hypothesis) {
  if (premise.empty() || hypothesis.empty())
    throw std::domain_error("text_match_forward: empty sentence");
  return match_pipeline(p.context, p.matcher, premise, hypothesis);
}

static std::vector<Tensor> or_sentinel(std::span<const Tensor> seq,
                                       const Tensor& sentinel) {
  if (!seq.empty()) return {seq.begin(), seq.end()};
  if (!sentinel.defined())
    throw StateError("graph model: no sentinel for an empty concept graph");
  return {sentinel};
}

Tensor gmatch_forward(const GmatchParams& p, const Tensor& sentinel,
                      std::span<const Tensor> premise_concepts,
                      std::span<const Tensor> hypothesis_concepts) {
  const std::vector<Tensor> prem = or_sentinel(premise_concepts, sentinel);
  const std::vector<Tensor> hyp = or_sentinel(hypothesis_concepts, sentinel);
  return match_pipeline(p.context, p.matcher, prem, hyp);
}

Tensor gconattn_forward(const GconAttnParams& p, const Tensor& sentinel,
                        std::span<const Tensor> premise_concepts,
                        std::span<const Tensor> hypothesis_concepts) {
  const std::vector<Tensor> prem = or_sentinel(premise_concepts, sentinel);
  const std::vector<Tensor> hyp = or_sentinel(hypothesis_concepts, sentinel);
  Tensor P = stack_rows(prem);  // no context encoding: raw concept embeddings
  Tensor H = stack_rows(hyp);
  Tensor E = matmul(P, transpose(H));
  Tensor beta = attend_rows(E, H);             // [K x d]
  Tensor alpha = attend_rows(transpose(E), P); // [J x d]
  std::vector<Tensor> p_match, h_match;
  p_match.reserve(prem.size());
  for (size_t i = 0; i < prem.size(); ++i)
    p_match.push_back(ffn_apply(
        p.matcher, matcher_features(prem[i], row(beta, static_cast<int>(i)))));
  h_match.reserve(hyp.size());
  for (size_t j = 0; j < hyp.size(); ++j)
    h_match.push_back(ffn_apply(
        p.matcher, matcher_features(hyp[j], row(alpha, static_cast<int>(j)))));
  Tensor Pm = stack_rows(p_match);
  Tensor Hm = stack_rows(h_match);
  const Tensor pooled[] = {reduce_max(Pm, 0), reduce_mean(Pm, 0),
                           reduce_max(Hm, 0), reduce_mean(Hm, 0)};
  return concat(pooled, 0);
}

Tensor merged_predict(const MergedModelParams& p, const Tensor& x_text,
                      const Tensor& x_graph) {
  Tensor input;
  if (x_text.defined() && x_graph.defined()) {
    const Tensor parts[] = {x_text, x_graph};
    input = concat(parts, 0);
  } else if (x_text.defined()) {
    input = x_text;
  } else if (x_graph.defined()) {
    input = x_graph;
  } else {
    throw StateError("merged_predict: no model output to classify");
  }
  if (input.dim(0) != p.classifier.input_dim())
    throw DimensionError("merged_predict: classifier expects width " +
                         std::to_string(p.classifier.input_dim()) + ", got " +
                         shape_str(input.shape()));
  return ffn_apply(p.classifier, input);
}

Classification classify(const Tensor& logits) {
  if (logits.rank() != 1 || logits.dim(0) != 2)
    throw DimensionError("classify: expects two logits, got " +
                         shape_str(logits.shape()));
  const double l0 = logits.value(0), l1 = logits.value(1);
  if (!std::isfinite(l0) || !std::isfinite(l1))
    throw std::domain_error("classify: non-finite logits");
  // p(entails) computed stably from the logit difference.
  const double d = l1 - l0;
  const double p_entails =
      d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
  if (p_entails > 0.5) return {Label::entails, p_entails};
  return {Label::neutral, 1.0 - p_entails};  // ties go to neutral
}

}  // namespace csqn
