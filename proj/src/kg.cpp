#include "csqn/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "csqn/errors.hpp"

namespace csqn {

std::string normalize_label(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c) || c == '_') {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 128 ? static_cast<char>(std::tolower(c))
                          : static_cast<char>(c));
  }
  return out;
}

KnowledgeGraph::KnowledgeGraph(std::span<const Triple> triples) {
  auto intern_concept = [&](const std::string& raw) {
    std::string norm = normalize_label(raw);
    auto it = label_to_id_.find(norm);
    if (it != label_to_id_.end()) return it->second;
    const int id = static_cast<int>(labels_.size());
    label_to_id_.emplace(norm, id);
    labels_.push_back(std::move(norm));
    return id;
  };
  auto intern_relation = [&](const std::string& raw) {
    std::string norm = normalize_label(raw);
    auto it = relation_to_id_.find(norm);
    if (it != relation_to_id_.end()) return it->second;
    const int id = static_cast<int>(relations_.size());
    relation_to_id_.emplace(norm, id);
    relations_.push_back(std::move(norm));
    return id;
  };

  std::set<std::tuple<int, int, int>> seen;
  for (const Triple& t : triples) {
    KgEdge e;
    e.head = intern_concept(t.head);
    e.relation = intern_relation(t.relation);
    e.tail = intern_concept(t.tail);
    if (seen.emplace(e.head, e.relation, e.tail).second) edges_.push_back(e);
  }
  adjacency_ = build_adjacency();
}

std::vector<std::vector<int>> KnowledgeGraph::build_adjacency() const {
  std::vector<std::vector<int>> adj(labels_.size());
  for (const KgEdge& e : edges_) {
    adj[static_cast<size_t>(e.head)].push_back(e.tail);
    if (e.tail != e.head) adj[static_cast<size_t>(e.tail)].push_back(e.head);
  }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return adj;
}

KnowledgeGraph KnowledgeGraph::parse(std::istream& in) {
  std::vector<Triple> triples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    bool all_space = true;
    for (unsigned char c : line)
      if (!std::isspace(c)) {
        all_space = false;
        break;
      }
    if (all_space) continue;

    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    if (fields.size() != 3)
      throw ParseError("kg: expected head<TAB>relation<TAB>tail, got " +
                           std::to_string(fields.size()) + " fields",
                       lineno);
    Triple t{fields[0], fields[1], fields[2]};
    if (normalize_label(t.head).empty() || normalize_label(t.relation).empty() ||
        normalize_label(t.tail).empty())
      throw ParseError("kg: empty field", lineno);
    triples.push_back(std::move(t));
  }
  return KnowledgeGraph(triples);
}

KnowledgeGraph KnowledgeGraph::load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kg file: " + path);
  return parse(in);
}

int KnowledgeGraph::concept_id(const std::string& normalized_label) const {
  auto it = label_to_id_.find(normalized_label);
  return it == label_to_id_.end() ? -1 : it->second;
}

const std::string& KnowledgeGraph::concept_label(int id) const {
  return labels_.at(static_cast<size_t>(id));
}

const std::string& KnowledgeGraph::relation_label(int id) const {
  return relations_.at(static_cast<size_t>(id));
}

std::span<const int> KnowledgeGraph::neighbors(int id) const {
  return adjacency_.at(static_cast<size_t>(id));
}

bool KnowledgeGraph::has_undirected_edge(int a, int b) const {
  const auto& adj = adjacency_.at(static_cast<size_t>(a));
  return std::binary_search(adj.begin(), adj.end(), b);
}

bool KnowledgeGraph::adjacency_consistent() const {
  return adjacency_ == build_adjacency();
}

KgStats kg_stats(const KnowledgeGraph& kg) {
  return {kg.concept_count(), kg.relation_count(), kg.fact_count()};
}

std::vector<MatchSpan> match_concepts(std::span<const std::string> tokens,
                                      const KnowledgeGraph& kg) {
  std::vector<std::string> norm(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) norm[i] = normalize_label(tokens[i]);

  std::vector<MatchSpan> out;
  const int n = static_cast<int>(tokens.size());
  int i = 0;
  while (i < n) {
    int matched = 0;
    int matched_id = -1;
    const int cap = std::min(kMaxMatchTokens, n - i);
    for (int len = cap; len >= 1; --len) {
      std::string phrase = norm[static_cast<size_t>(i)];
      for (int k = 1; k < len; ++k) {
        phrase += ' ';
        phrase += norm[static_cast<size_t>(i + k)];
      }
      const int id = kg.concept_id(phrase);
      if (id >= 0) {
        matched = len;
        matched_id = id;
        break;
      }
    }
    if (matched > 0) {
      out.push_back({i, i + matched - 1, matched_id});
      i += matched;
    } else {
      ++i;
    }
  }
  return out;
}

bool ConceptGraph::contains(int id) const {
  return std::find(vertices.begin(), vertices.end(), id) != vertices.end();
}

// Induced edges on a vertex set, in canonical (labelwise) order so results do
// not depend on triple-file line order.
static std::vector<KgEdge> induced_edges(const KnowledgeGraph& kg,
                                         const std::set<int>& verts) {
  std::vector<KgEdge> out;
  for (const KgEdge& e : kg.edges())
    if (verts.count(e.head) && verts.count(e.tail)) out.push_back(e);
  std::sort(out.begin(), out.end(), [&](const KgEdge& a, const KgEdge& b) {
    return std::tie(kg.concept_label(a.head), kg.relation_label(a.relation),
                    kg.concept_label(a.tail)) <
           std::tie(kg.concept_label(b.head), kg.relation_label(b.relation),
                    kg.concept_label(b.tail));
  });
  return out;
}

static std::vector<int> sorted_by_label(const KnowledgeGraph& kg,
                                        const std::set<int>& ids) {
  std::vector<int> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    return kg.concept_label(a) < kg.concept_label(b);
  });
  return out;
}

ConceptGraph build_concepts_only(const KnowledgeGraph& kg,
                                 std::span<const MatchSpan> spans) {
  ConceptGraph g;
  std::set<int> verts;
  for (const MatchSpan& s : spans) {
    if (verts.insert(s.concept_id).second) g.vertices.push_back(s.concept_id);
    g.origin_spans[s.concept_id].push_back({s.start, s.end});
  }
  g.edges = induced_edges(kg, verts);
  return g;
}

ConceptGraph build_one_hop(const KnowledgeGraph& kg, const ConceptGraph& base) {
  ConceptGraph g;
  g.vertices = base.vertices;
  g.origin_spans = base.origin_spans;
  std::set<int> verts(base.vertices.begin(), base.vertices.end());
  std::set<int> added;
  for (int v : base.vertices)
    for (int w : kg.neighbors(v))
      if (!verts.count(w)) added.insert(w);
  for (int w : sorted_by_label(kg, added)) g.vertices.push_back(w);
  verts.insert(added.begin(), added.end());
  g.edges = induced_edges(kg, verts);
  return g;
}

ConceptGraph build_two_hop(const KnowledgeGraph& kg, const ConceptGraph& base) {
  ConceptGraph g;
  g.vertices = base.vertices;
  g.origin_spans = base.origin_spans;
  std::set<int> verts(base.vertices.begin(), base.vertices.end());
  std::set<int> added;
  // Candidates adjacent to some base vertex; keep those adjacent to two
  // distinct base vertices (a length-2 bridge).
  for (int u : base.vertices) {
    for (int x : kg.neighbors(u)) {
      if (verts.count(x) || added.count(x)) continue;
      for (int v : base.vertices) {
        if (v != u && kg.has_undirected_edge(x, v)) {
          added.insert(x);
          break;
        }
      }
    }
  }
  for (int w : sorted_by_label(kg, added)) g.vertices.push_back(w);
  verts.insert(added.begin(), added.end());
  g.edges = induced_edges(kg, verts);
  return g;
}

ConceptGraph build_graph(GraphStrategy strategy, const KnowledgeGraph& kg,
                         std::span<const MatchSpan> spans) {
  ConceptGraph base = build_concepts_only(kg, spans);
  switch (strategy) {
    case GraphStrategy::concepts_only:
      return base;
    case GraphStrategy::one_hop:
      return build_one_hop(kg, base);
    case GraphStrategy::two_hop:
      return build_two_hop(kg, base);
  }
  throw std::domain_error("build_graph: unknown strategy");
}

const char* graph_strategy_str(GraphStrategy s) {
  switch (s) {
    case GraphStrategy::concepts_only:
      return "concepts_only";
    case GraphStrategy::one_hop:
      return "one_hop";
    case GraphStrategy::two_hop:
      return "two_hop";
  }
  return "?";
}

GraphStrategy parse_graph_strategy(const std::string& s) {
  if (s == "concepts_only") return GraphStrategy::concepts_only;
  if (s == "one_hop") return GraphStrategy::one_hop;
  if (s == "two_hop") return GraphStrategy::two_hop;
  throw std::domain_error("unknown graph strategy '" + s + "'");
}

std::vector<int> order_concepts(const KnowledgeGraph& kg, const ConceptGraph& g) {
  struct Key {
    int start;
    int len;
    const std::string* label;
    int id;
  };
  std::vector<Key> keys;
  keys.reserve(g.vertices.size());
  for (int v : g.vertices) {
    auto it = g.origin_spans.find(v);
    if (it == g.origin_spans.end() || it->second.empty())
      throw std::domain_error("order_concepts: vertex '" + kg.concept_label(v) +
                              "' has no text span (hop-added concepts are unordered)");
    const SpanRange* earliest = &it->second.front();
    for (const SpanRange& s : it->second)
      if (s.start < earliest->start) earliest = &s;
    keys.push_back(
        {earliest->start, earliest->end - earliest->start + 1, &kg.concept_label(v), v});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.len != b.len) return a.len > b.len;  // longer concept first
    return *a.label < *b.label;
  });
  std::vector<int> out;
  out.reserve(keys.size());
  for (const Key& k : keys) out.push_back(k.id);
  return out;
}

GraphSizeReport avg_graph_size(std::span<const ExamplePair> dataset,
                               const KnowledgeGraph& kg, GraphStrategy strategy) {
  if (dataset.empty()) throw std::domain_error("avg_graph_size: empty dataset");
  double prem = 0.0, hyp = 0.0;
  for (const ExamplePair& pair : dataset) {
    const auto ptoks = tokenize(pair.premise);
    const auto htoks = tokenize(pair.hypothesis);
    prem += static_cast<double>(
        build_graph(strategy, kg, match_concepts(ptoks, kg)).vertex_count());
    hyp += static_cast<double>(
        build_graph(strategy, kg, match_concepts(htoks, kg)).vertex_count());
  }
  const double n = static_cast<double>(dataset.size());
  return {prem / n, hyp / n};
}

}  // namespace csqn
