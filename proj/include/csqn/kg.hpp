#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "csqn/data.hpp"

namespace csqn {

struct Triple {
  std::string head, relation, tail;
};

struct KgEdge {
  int head = 0;
  int relation = 0;
  int tail = 0;
  friend bool operator==(const KgEdge&, const KgEdge&) = default;
  friend auto operator<=>(const KgEdge&, const KgEdge&) = default;
};

/// Lowercases ASCII, maps underscores to spaces, collapses whitespace runs,
/// and trims.  Applied identically to concept labels and query phrases.
std::string normalize_label(const std::string& raw);

/// Immutable store of concepts and labeled directed edges, with an undirected
/// adjacency index for neighborhood queries.  Safe for concurrent readers.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(std::span<const Triple> triples);

  /// Tab-separated `head<TAB>relation<TAB>tail` lines; `#` comments and blank
  /// lines are ignored; duplicates collapse.  Malformed lines raise
  /// ParseError naming the line.
  static KnowledgeGraph load_triples(const std::string& path);
  static KnowledgeGraph parse(std::istream& in);

  int concept_count() const { return static_cast<int>(labels_.size()); }
  int relation_count() const { return static_cast<int>(relations_.size()); }
  int fact_count() const { return static_cast<int>(edges_.size()); }

  int concept_id(const std::string& normalized_label) const;  // -1 when absent
  const std::string& concept_label(int id) const;
  const std::string& relation_label(int id) const;
  const std::vector<KgEdge>& edges() const { return edges_; }
  std::span<const int> neighbors(int id) const;  // undirected, sorted, unique
  bool has_undirected_edge(int a, int b) const;

  /// Rebuilds the adjacency index from the edge set and compares.
  bool adjacency_consistent() const;

 private:
  std::vector<std::vector<int>> build_adjacency() const;

  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> label_to_id_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, int> relation_to_id_;
  std::vector<KgEdge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

struct KgStats {
  int64_t concepts = 0;
  int64_t relations = 0;
  int64_t facts = 0;
};

KgStats kg_stats(const KnowledgeGraph& kg);

/// Inclusive token span matched to a concept.
struct MatchSpan {
  int start = 0;
  int end = 0;
  int concept_id = 0;
};

inline constexpr int kMaxMatchTokens = 5;

/// Greedy left-to-right longest match of token n-grams (up to
/// kMaxMatchTokens) against concept labels.  Matches never overlap; scanning
/// resumes after each match.
std::vector<MatchSpan> match_concepts(std::span<const std::string> tokens,
                                      const KnowledgeGraph& kg);

struct SpanRange {
  int start = 0;
  int end = 0;
  friend bool operator==(const SpanRange&, const SpanRange&) = default;
};

/// Text-derived subgraph: vertices, the knowledge-graph edges induced on
/// them, and (for text-matched concepts) the token spans they came from.
/// Edges are kept for inspection; the models consume only the vertices.
struct ConceptGraph {
  std::vector<int> vertices;  // ordered
  std::vector<KgEdge> edges;
  std::map<int, std::vector<SpanRange>> origin_spans;

  bool contains(int id) const;
  int64_t vertex_count() const { return static_cast<int64_t>(vertices.size()); }
};

enum class GraphStrategy { concepts_only, one_hop, two_hop };

const char* graph_strategy_str(GraphStrategy s);
GraphStrategy parse_graph_strategy(const std::string& s);

/// Vertices are the matched concepts; edges are every kg edge with both
/// endpoints matched.
ConceptGraph build_concepts_only(const KnowledgeGraph& kg,
                                 std::span<const MatchSpan> spans);

/// Adds every undirected neighbor of the base vertices.
ConceptGraph build_one_hop(const KnowledgeGraph& kg, const ConceptGraph& base);

/// Adds only vertices that bridge two distinct base vertices via a length-2
/// undirected path.
ConceptGraph build_two_hop(const KnowledgeGraph& kg, const ConceptGraph& base);

ConceptGraph build_graph(GraphStrategy strategy, const KnowledgeGraph& kg,
                         std::span<const MatchSpan> spans);

/// Sequence order for Gmatch: earliest span start ascending, span token
/// length descending, label lexicographic.  Every vertex must carry a span
/// (Concepts Only graphs), otherwise domain_error.
std::vector<int> order_concepts(const KnowledgeGraph& kg, const ConceptGraph& g);

struct GraphSizeReport {
  double avg_premise_vertices = 0.0;
  double avg_hypothesis_vertices = 0.0;
};

/// Mean vertex counts over the dataset for one strategy.
GraphSizeReport avg_graph_size(std::span<const ExamplePair> dataset,
                               const KnowledgeGraph& kg, GraphStrategy strategy);

}  // namespace csqn
