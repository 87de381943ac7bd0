#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sciqa/lexicon.hpp"

namespace sciqa {

/// Relation triple (subject, predicate, objects) with optional time and
/// location adverbials. Phrases are surface text; lemmatization happens when
/// graphs are built.
struct Triple {
  std::string subject;
  std::string predicate;
  std::vector<std::string> objects;
  std::optional<std::string> time;
  std::optional<std::string> location;
  std::string source_sentence_id;

  /// Throws Error if the subject or predicate is empty, if there is neither
  /// an object nor an adverbial, or if a phrase cannot be written in the
  /// interchange format.
  void validate() const;

  bool operator==(const Triple&) const = default;
};

/// Interchange row: `id | subject | predicate | obj1; obj2 | time=... | loc=...`.
std::string format_triple(const Triple& triple);
Triple parse_triple_row(std::string_view row);

using TripleMap = std::map<std::string, std::vector<Triple>>;

/// Reads interchange rows grouped by sentence id (row order kept within an
/// id). Blank lines and lines starting with '#' are ignored.
TripleMap parse_triples(std::string_view contents, const std::string& source = "<memory>");
TripleMap ingest_triples(const std::string& path);
std::string export_triples(const TripleMap& triples);

/// Anything that turns a sentence into triples.
class TripleExtractor {
 public:
  virtual ~TripleExtractor() = default;
  virtual std::vector<Triple> extract(std::string_view sentence, const std::string& sentence_id) const = 0;
  /// Changes whenever the extractor's output for a given sentence may change.
  virtual std::string version() const = 0;
};

/// Shallow pattern extractor: closed-class tagging, a verb lexicon, and NP
/// chunking by position. Handles copulas with relational nouns ("is part
/// of"), passives with a by-agent, prepositions folded into object-less
/// predicates, in/at/on/during adverbials, and conjoined verb phrases that
/// share a subject.
class RuleBasedExtractor final : public TripleExtractor {
 public:
  explicit RuleBasedExtractor(const Lexicon& lexicon = Lexicon::builtin()) : lexicon_(&lexicon) {}

  std::vector<Triple> extract(std::string_view sentence, const std::string& sentence_id) const override;
  std::vector<Triple> extract(std::string_view sentence) const { return extract(sentence, ""); }
  std::string version() const override { return "rules-1"; }

 private:
  const Lexicon* lexicon_;
};

/// Serves externally produced triples by sentence id; sentences that are not
/// covered go to `fallback` (or yield nothing when it is null).
class IngestedExtractor final : public TripleExtractor {
 public:
  IngestedExtractor(TripleMap triples, std::shared_ptr<const TripleExtractor> fallback);

  std::vector<Triple> extract(std::string_view sentence, const std::string& sentence_id) const override;
  std::string version() const override;

 private:
  TripleMap triples_;
  std::shared_ptr<const TripleExtractor> fallback_;
};

}  // namespace sciqa
