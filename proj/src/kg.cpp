#include "sciqa/kg.hpp"

#include <map>
#include <sstream>

#include "sciqa/common.hpp"

namespace sciqa {

std::string to_string(NodeKind kind) { return kind == NodeKind::entity ? "entity" : "predicate"; }

std::string to_string(EdgeLabel label) {
  switch (label) {
    case EdgeLabel::subj: return "subj";
    case EdgeLabel::obj: return "obj";
    case EdgeLabel::time: return "time";
    case EdgeLabel::loc: return "loc";
  }
  return "?";
}

std::vector<int> KnowledgeGraph::predicate_nodes() const {
  std::vector<int> out;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::predicate) out.push_back(n.id);
  }
  return out;
}

int KnowledgeGraph::add_node(std::string text, NodeKind kind) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({id, std::move(text), kind, {}});
  return id;
}

void KnowledgeGraph::add_edge(int from, int to, EdgeLabel label) { edges_.push_back({from, to, label}); }

void KnowledgeGraph::add_provenance(int node, const std::string& sentence_id) {
  if (!sentence_id.empty()) nodes_.at(static_cast<std::size_t>(node)).provenance.insert(sentence_id);
}

void KnowledgeGraph::validate() const {
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> subj_edges(nodes_.size(), 0);
  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) throw Error("edge endpoint out of range");
    if (e.label == EdgeLabel::subj) {
      ++subj_edges[static_cast<std::size_t>(e.from)];
      ++subj_edges[static_cast<std::size_t>(e.to)];
    }
  }
  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::predicate && subj_edges[static_cast<std::size_t>(node.id)] == 0) {
      throw Error("predicate node " + std::to_string(node.id) + " has no subj edge");
    }
  }
}

namespace {

std::vector<std::string> content_lemmas(std::string_view phrase, const Lexicon& lexicon) {
  std::vector<std::string> out;
  for (const auto& w : word_tokens(phrase)) {
    if (w == "a" || w == "an" || w == "the") continue;
    out.push_back(lexicon.lemma(w));
  }
  return out;
}

std::string join(const std::vector<std::string>& words, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

std::string normalize_entity(std::string_view phrase, const Lexicon& lexicon) {
  auto words = content_lemmas(phrase, lexicon);
  std::size_t b = 0, e = words.size();
  while (b < e && lexicon.is_stop_word(words[b])) ++b;
  while (e > b && lexicon.is_stop_word(words[e - 1])) --e;
  return join(words, b, e);
}

std::string normalize_predicate(std::string_view phrase, const Lexicon& lexicon) {
  auto words = content_lemmas(phrase, lexicon);
  if (words.empty()) return lemmatize(phrase, lexicon);
  return join(words, 0, words.size());
}

KnowledgeGraph build_graph(const std::vector<Triple>& triples, const Lexicon& lexicon) {
  KnowledgeGraph g;
  std::map<std::string, int> entities;
  auto entity = [&](const std::string& phrase, const std::string& source) -> int {
    auto text = normalize_entity(phrase, lexicon);
    if (text.empty()) return -1;
    auto [it, inserted] = entities.try_emplace(text, -1);
    if (inserted) it->second = g.add_node(text, NodeKind::entity);
    g.add_provenance(it->second, source);
    return it->second;
  };
  for (const auto& t : triples) {
    if (normalize_entity(t.subject, lexicon).empty()) continue;
    const int s = entity(t.subject, t.source_sentence_id);
    const int p = g.add_node(normalize_predicate(t.predicate, lexicon), NodeKind::predicate);
    g.add_provenance(p, t.source_sentence_id);
    g.add_edge(s, p, EdgeLabel::subj);
    for (const auto& o : t.objects) {
      if (int id = entity(o, t.source_sentence_id); id >= 0) g.add_edge(p, id, EdgeLabel::obj);
    }
    if (t.time) {
      if (int id = entity(*t.time, t.source_sentence_id); id >= 0) g.add_edge(p, id, EdgeLabel::time);
    }
    if (t.location) {
      if (int id = entity(*t.location, t.source_sentence_id); id >= 0) g.add_edge(p, id, EdgeLabel::loc);
    }
  }
  return g;
}

GraphPair build_pair(const Hypothesis& hypothesis, const std::vector<SentenceHit>& supports,
                     const TripleExtractor& extractor, const Lexicon& lexicon) {
  GraphPair pair;
  pair.question_id = hypothesis.question_id;
  pair.option_label = hypothesis.option_label;
  const std::string hyp_id = "hyp:" + hypothesis.question_id + "/" + hypothesis.option_label;
  pair.hypothesis_graph = build_graph(extractor.extract(hypothesis.text, hyp_id), lexicon);

  std::vector<Triple> support_triples;
  for (const auto& hit : supports) {
    pair.support_ids.push_back(hit.sentence_id);
    auto triples = extractor.extract(hit.text, hit.sentence_id);
    support_triples.insert(support_triples.end(), std::make_move_iterator(triples.begin()),
                           std::make_move_iterator(triples.end()));
  }
  pair.support_graph = build_graph(support_triples, lexicon);

  if (pair.hypothesis_graph.predicate_nodes().empty()) {
    pair.flagged = true;
    pair.flag_reason = "hypothesis graph has no predicate node";
  } else if (supports.empty()) {
    pair.flagged = true;
    pair.flag_reason = "no support sentences";
  } else if (pair.support_graph.predicate_nodes().empty()) {
    pair.flagged = true;
    pair.flag_reason = "support graph has no predicate node";
  }
  return pair;
}

std::string dump_graph(const KnowledgeGraph& graph) {
  std::ostringstream out;
  for (const auto& n : graph.nodes()) {
    out << "node " << n.id << ' ' << to_string(n.kind) << ' ' << n.text;
    if (!n.provenance.empty()) {
      out << " [";
      bool first = true;
      for (const auto& s : n.provenance) {
        out << (first ? "" : ",") << s;
        first = false;
      }
      out << ']';
    }
    out << '\n';
  }
  for (const auto& e : graph.edges()) {
    out << "edge " << e.from << ' ' << e.to << ' ' << to_string(e.label) << '\n';
  }
  return out.str();
}

std::string graph_to_dot(const KnowledgeGraph& graph, std::string_view name) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out + "\"";
  };
  std::ostringstream out;
  out << "digraph " << quote(std::string(name)) << " {\n";
  for (const auto& n : graph.nodes()) {
    out << "  n" << n.id << " [label=" << quote(n.text)
        << (n.kind == NodeKind::predicate ? ", shape=box" : ", shape=ellipse") << "];\n";
  }
  for (const auto& e : graph.edges()) {
    out << "  n" << e.from << " -> n" << e.to << " [label=" << quote(to_string(e.label)) << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace sciqa
