#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sciqa/hypothesis.hpp"
#include "sciqa/lexicon.hpp"
#include "sciqa/retrieval.hpp"
#include "sciqa/triples.hpp"

namespace sciqa {

enum class NodeKind : std::uint8_t { entity, predicate };
enum class EdgeLabel : std::uint8_t { subj = 0, obj = 1, time = 2, loc = 3 };
inline constexpr int kNumEdgeLabels = 4;

std::string to_string(NodeKind kind);
std::string to_string(EdgeLabel label);

struct Node {
  int id = 0;
  std::string text;
  NodeKind kind = NodeKind::entity;
  std::set<std::string> provenance;  // source sentence ids
};

struct Edge {
  int from = 0;
  int to = 0;
  EdgeLabel label = EdgeLabel::subj;
};

/// Directed, edge-labeled graph over lemmatized phrases. Node ids are dense
/// (0..n-1) in first-appearance order.
class KnowledgeGraph {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<int> predicate_nodes() const;
  bool empty() const { return nodes_.empty(); }

  int add_node(std::string text, NodeKind kind);
  void add_edge(int from, int to, EdgeLabel label);
  void add_provenance(int node, const std::string& sentence_id);

  /// Throws Error when an edge endpoint is missing or a predicate node has
  /// no incident subj edge.
  void validate() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

/// Lemmatized entity text with articles removed and stop words trimmed from
/// both ends; "" means the phrase carries no content.
std::string normalize_entity(std::string_view phrase, const Lexicon& lexicon);
/// Lemmatized predicate text with articles removed.
std::string normalize_predicate(std::string_view phrase, const Lexicon& lexicon);

/// Subject -> predicate edges are labeled subj, predicate -> object obj, and
/// predicate -> adverbial time/loc. Entity nodes merge on normalized text;
/// every triple gets its own predicate node. Triples whose subject has no
/// content are skipped; contentless objects are dropped.
KnowledgeGraph build_graph(const std::vector<Triple>& triples, const Lexicon& lexicon = Lexicon::builtin());

struct GraphPair {
  KnowledgeGraph hypothesis_graph;
  KnowledgeGraph support_graph;
  std::string question_id;
  std::string option_label;
  std::vector<std::string> support_ids;
  bool flagged = false;
  std::string flag_reason;
};

/// Hypothesis graph from the hypothesis text alone; support graph from the
/// union of triples over all support sentences. Pairs without a hypothesis
/// predicate or without supports are flagged, not rejected.
GraphPair build_pair(const Hypothesis& hypothesis, const std::vector<SentenceHit>& supports,
                     const TripleExtractor& extractor, const Lexicon& lexicon = Lexicon::builtin());

/// One line per node ("node <id> <kind> <text> [<sources>]") then one per
/// edge ("edge <from> <to> <label>").
std::string dump_graph(const KnowledgeGraph& graph);
/// Graphviz rendering; predicate nodes are boxes.
std::string graph_to_dot(const KnowledgeGraph& graph, std::string_view name = "kg");

}  // namespace sciqa
