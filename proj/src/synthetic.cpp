#include "csqn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "csqn/errors.hpp"

namespace csqn {

namespace {

constexpr int kClusterSize = 4;
constexpr double kNoise = 0.02;

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(uint64_t seed) : eng(seed) {}
  double unit() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int below(int n) { return static_cast<int>(eng() % static_cast<uint64_t>(n)); }
  bool coin() { return (eng() & 1) != 0; }
};

std::string word_name(int i) {
  std::string s = std::to_string(i);
  while (s.size() < 3) s.insert(s.begin(), '0');
  return "w" + s;
}

}  // namespace

SyntheticCorpus gen_synthetic(uint64_t seed, int n_train, int n_dev, int vocab_size,
                              int emb_dim) {
  if (vocab_size < 10)
    throw std::domain_error("gen_synthetic: vocab_size must be >= 10");
  if (n_train < 1 || n_dev < 1)
    throw std::domain_error("gen_synthetic: corpus sizes must be positive");
  if (emb_dim < 2) throw std::domain_error("gen_synthetic: emb_dim must be >= 2");

  Rng rng(seed);

  // Partition the vocabulary into clusters of kClusterSize; a would-be
  // size-1 tail is absorbed into the last cluster so every word takes part
  // in at least one triple.
  std::vector<int> cluster_of(static_cast<size_t>(vocab_size));
  int n_clusters = 0;
  for (int i = 0; i < vocab_size;) {
    const int remaining = vocab_size - i;
    const int take = (remaining == kClusterSize + 1)
                         ? remaining
                         : std::min(kClusterSize, remaining);
    for (int k = 0; k < take; ++k) cluster_of[static_cast<size_t>(i + k)] = n_clusters;
    i += take;
    ++n_clusters;
  }
  std::vector<std::vector<int>> clusters(static_cast<size_t>(n_clusters));
  for (int w = 0; w < vocab_size; ++w)
    clusters[static_cast<size_t>(cluster_of[static_cast<size_t>(w)])].push_back(w);

  SyntheticCorpus corpus{
      {}, {}, {}, EmbeddingTable(emb_dim, seed), EmbeddingTable(emb_dim, seed + 1)};

  // Synonym cliques become the knowledge graph.
  for (const std::vector<int>& members : clusters)
    for (size_t a = 0; a < members.size(); ++a)
      for (size_t b = a + 1; b < members.size(); ++b)
        corpus.kg_triples.push_back(
            {word_name(members[a]), "synonym_of", word_name(members[b])});

  // Cluster-coded embeddings: shared centroid plus small per-word noise.
  // The first 2*emb_dim centroids are signed basis directions, so distinct
  // clusters are exactly orthogonal or opposite; any overflow falls back to
  // random directions.  `gain` sets the centroid magnitude: the concept
  // table uses a larger one than the word table, which keeps the attention
  // contrasts in the graph branch strong without saturating the text GRUs.
  const double spread = std::sqrt(3.0 / emb_dim);
  auto fill_table = [&](EmbeddingTable& table, double gain) {
    std::vector<std::vector<double>> centroids(static_cast<size_t>(n_clusters));
    for (int k = 0; k < n_clusters; ++k) {
      std::vector<double>& c = centroids[static_cast<size_t>(k)];
      c.assign(static_cast<size_t>(emb_dim), 0.0);
      if (k < 2 * emb_dim) {
        c[static_cast<size_t>(k % emb_dim)] = k < emb_dim ? gain : -gain;
      } else {
        for (double& x : c) x = gain * rng.uniform(-spread, spread);
      }
    }
    for (int w = 0; w < vocab_size; ++w) {
      std::vector<double> v = centroids[static_cast<size_t>(cluster_of[static_cast<size_t>(w)])];
      for (double& x : v) x += rng.uniform(-kNoise, kNoise);
      table.insert(word_name(w), std::move(v));
    }
  };
  fill_table(corpus.word_embeddings, 1.0);
  fill_table(corpus.concept_embeddings, 2.5);

  auto covered = [&](int hyp_word, const std::vector<int>& premise) {
    for (int p : premise)
      if (p == hyp_word ||
          cluster_of[static_cast<size_t>(p)] == cluster_of[static_cast<size_t>(hyp_word)])
        return true;
    return false;
  };

  auto sample_pair = [&]() {
    const bool want_entails = rng.coin();
    while (true) {
      const int kp = 3 + rng.below(3);  // 3..5 premise words
      std::vector<int> premise;
      while (static_cast<int>(premise.size()) < kp) {
        const int w = rng.below(vocab_size);
        if (std::find(premise.begin(), premise.end(), w) == premise.end())
          premise.push_back(w);
      }
      const int kh = 2 + rng.below(2);  // 2..3 hypothesis words
      std::vector<int> hyp;
      auto push_unique = [&](int w) {
        if (std::find(hyp.begin(), hyp.end(), w) != hyp.end()) return false;
        hyp.push_back(w);
        return true;
      };
      int guard = 0;
      if (want_entails) {
        while (static_cast<int>(hyp.size()) < kh && ++guard < 200) {
          const int p = premise[static_cast<size_t>(rng.below(kp))];
          const std::vector<int>& cl = clusters[static_cast<size_t>(
              cluster_of[static_cast<size_t>(p)])];
          push_unique(cl[static_cast<size_t>(rng.below(static_cast<int>(cl.size())))]);
        }
      } else {
        // Between one and kh uncovered words, the rest covered.
        const int bad_n = 1 + rng.below(kh);
        while (static_cast<int>(hyp.size()) < kh && ++guard < 500) {
          if (static_cast<int>(hyp.size()) < bad_n) {
            const int w = rng.below(vocab_size);
            if (!covered(w, premise)) push_unique(w);
          } else {
            const int p = premise[static_cast<size_t>(rng.below(kp))];
            const std::vector<int>& cl = clusters[static_cast<size_t>(
                cluster_of[static_cast<size_t>(p)])];
            push_unique(cl[static_cast<size_t>(rng.below(static_cast<int>(cl.size())))]);
          }
        }
      }
      if (static_cast<int>(hyp.size()) != kh) continue;
      bool entails = true;
      for (int h : hyp) entails = entails && covered(h, premise);
      if (entails != want_entails) continue;

      ExamplePair pair;
      for (int w : premise) {
        if (!pair.premise.empty()) pair.premise += ' ';
        pair.premise += word_name(w);
      }
      for (int w : hyp) {
        if (!pair.hypothesis.empty()) pair.hypothesis += ' ';
        pair.hypothesis += word_name(w);
      }
      pair.label = entails ? Label::entails : Label::neutral;
      return pair;
    }
  };

  corpus.train.reserve(static_cast<size_t>(n_train));
  for (int i = 0; i < n_train; ++i) corpus.train.push_back(sample_pair());
  corpus.dev.reserve(static_cast<size_t>(n_dev));
  for (int i = 0; i < n_dev; ++i) corpus.dev.push_back(sample_pair());
  return corpus;
}

}  // namespace csqn
