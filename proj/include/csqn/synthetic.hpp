#pragma once

#include <cstdint>
#include <vector>

#include "csqn/data.hpp"
#include "csqn/embeddings.hpp"
#include "csqn/kg.hpp"

namespace csqn {

/// Self-contained verification corpus.  The vocabulary is partitioned into
/// synonym clusters wired as cliques in the emitted knowledge graph, and both
/// embedding tables place cluster members near a shared centroid.  A pair is
/// labeled entails exactly when every hypothesis token's concept is connected
/// (identical, or one synonym edge away) to some premise token's concept.
struct SyntheticCorpus {
  std::vector<ExamplePair> train, dev;
  std::vector<Triple> kg_triples;
  EmbeddingTable word_embeddings;
  EmbeddingTable concept_embeddings;
};

SyntheticCorpus gen_synthetic(uint64_t seed, int n_train, int n_dev,
                              int vocab_size = 60, int emb_dim = 16);

}  // namespace csqn
