#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sciqa {

/// Closed word classes used by the shallow extractor.
enum class WordClass { det, pron, prep, aux, neg, conj, sub, wh, adv };

/// A token with its byte span in the source text. `text` keeps the original
/// casing; `lower` is the lowercased form.
struct Token {
  std::string text;
  std::string lower;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool is_word = false;
};

/// Splits text into word and punctuation tokens. Clitics ('s, n't, 're, ...)
/// become separate tokens, so "don't" yields "do" + "n't".
std::vector<Token> tokenize(std::string_view text);

/// Lowercased word tokens only.
std::vector<std::string> word_tokens(std::string_view text);

/// Lemma map, stop words and the small closed-class POS lexicon.
/// Immutable once built.
class Lexicon {
 public:
  /// Lexicon compiled from the data files shipped under data/lexicon.
  static const Lexicon& builtin();
  /// Loads the same file set from a directory (lemmas.tsv, stopwords.txt,
  /// verbs.txt, function_words.txt, time_nouns.txt, location_nouns.txt).
  static Lexicon from_directory(const std::string& dir);

  struct Sources {
    std::string lemmas;
    std::string stop_words;
    std::string verbs;
    std::string function_words;
    std::string time_nouns;
    std::string location_nouns;
  };
  explicit Lexicon(const Sources& sources);

  /// Lemma of one lowercase word. Idempotent.
  std::string lemma(std::string_view word) const;

  bool is_stop_word(std::string_view word) const { return stop_words_.contains(std::string(word)); }
  bool is_verb(std::string_view lemma) const { return verbs_.contains(std::string(lemma)); }
  bool has_class(std::string_view word, WordClass cls) const;
  bool is_function_word(std::string_view word) const;
  bool is_time_noun(std::string_view word) const { return time_nouns_.contains(std::string(word)); }
  bool is_location_noun(std::string_view word) const {
    return location_nouns_.contains(std::string(word));
  }

  const std::unordered_map<std::string, std::string>& lemma_map() const { return lemmas_; }

 private:
  std::string apply_rules(const std::string& word) const;

  std::unordered_map<std::string, std::string> lemmas_;
  std::unordered_set<std::string> stop_words_;
  std::unordered_set<std::string> verbs_;
  std::unordered_map<std::string, unsigned> classes_;
  std::unordered_set<std::string> time_nouns_;
  std::unordered_set<std::string> location_nouns_;
};

/// Lowercases, tokenizes and maps every word token through the lexicon.
/// Punctuation is dropped. Idempotent; nonempty input never yields "".
std::string lemmatize(std::string_view phrase, const Lexicon& lexicon);

}  // namespace sciqa
