#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sciqa/hypothesis.hpp"

namespace sciqa {

/// Index-time tokenization: lowercase, split on non-alphanumerics, no stemming.
std::vector<std::string> index_terms(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Drops corpus sentences that are poor evidence: negated statements,
/// unexpected characters, or overly long lines.
struct NoiseFilter {
  std::set<std::string> negation_words{"not", "except", "no", "never", "n't"};
  std::size_t max_tokens = 40;

  bool is_noisy(std::string_view sentence) const;
};

/// Printable ASCII plus curly quotes and en/em dashes.
bool has_only_allowed_characters(std::string_view sentence);

struct CorpusLine {
  std::string id;  // empty: assigned from the line number
  std::string text;
};

/// Reads "text" or "id<TAB>text" lines; empty lines are skipped but still
/// consume a line number.
std::vector<CorpusLine> read_corpus(std::istream& in);
std::vector<CorpusLine> read_corpus_file(const std::string& path);

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

struct ScoredDoc {
  std::uint32_t doc = 0;
  double score = 0.0;
};

/// Write-once inverted index over corpus sentences. Documents are numbered in
/// input order; ranking ties break on that number.
class CorpusIndex {
 public:
  static constexpr int kFormatVersion = 1;

  CorpusIndex() = default;
  static CorpusIndex build(const std::vector<CorpusLine>& lines);

  /// Writes manifest.json, sentences.tsv and postings.bin into `dir`.
  void save(const std::string& dir, const std::string& corpus_checksum = {}) const;
  static CorpusIndex load(const std::string& dir);
  /// Corpus checksum recorded in a saved manifest, or "" if none is readable.
  static std::string stored_checksum(const std::string& dir);

  std::size_t size() const { return texts_.size(); }
  double average_length() const { return avg_length_; }
  std::uint32_t length(std::uint32_t doc) const { return lengths_.at(doc); }
  std::size_t document_frequency(const std::string& term) const;
  const std::vector<Posting>* postings(const std::string& term) const;
  const std::map<std::string, std::vector<Posting>>& all_postings() const { return postings_; }

  const std::string& text(std::uint32_t doc) const { return texts_.at(doc); }
  const std::string& id(std::uint32_t doc) const { return ids_.at(doc); }

  /// Lucene-style BM25 idf: log(1 + (N - df + 0.5) / (df + 0.5)).
  double idf(const std::string& term) const;

  /// BM25 over the distinct query terms; returns at most `limit` documents
  /// with positive overlap in (score desc, doc asc) order.
  std::vector<ScoredDoc> rank(std::string_view query, std::size_t limit,
                              const Bm25Params& params = {}) const;

 private:
  void finalize();

  std::vector<std::string> ids_;
  std::vector<std::string> texts_;
  std::vector<std::uint32_t> lengths_;
  std::map<std::string, std::vector<Posting>> postings_;
  double avg_length_ = 0.0;
};

struct SentenceHit {
  std::uint32_t doc = 0;
  std::string sentence_id;
  std::string text;
  double relevance_score = 0.0;
};

struct RetrievalConfig {
  std::size_t k = 20;
  std::size_t overfetch_factor = 5;
  Bm25Params bm25;
  NoiseFilter filter;
};

/// Ranks candidates by relevance to `query`, drops noisy sentences, keeps at
/// most `config.k` survivors.
std::vector<SentenceHit> search_text(const CorpusIndex& index, std::string_view query,
                                     const RetrievalConfig& config = {});

std::vector<SentenceHit> search_supports(const CorpusIndex& index, const Hypothesis& hypothesis,
                                         const RetrievalConfig& config = {});

}  // namespace sciqa
