#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sciqa {

enum class HypothesisRule { wh_replace, wh_phrase_replace, append };

std::string to_string(HypothesisRule rule);

struct Hypothesis {
  std::string text;
  std::string question_id;
  std::string option_label;
  HypothesisRule rule_applied = HypothesisRule::append;
};

/// Multi-word wh-phrases ("which of these", ...) that are replaced as a unit.
class PhraseTable {
 public:
  /// The table shipped in data/wh_phrases.txt.
  static const PhraseTable& builtin();
  static PhraseTable load(const std::string& path);
  /// One phrase per line; '#' starts a comment line.
  static PhraseTable parse(std::string_view contents);

  /// Lowercased word sequences, longest first.
  const std::vector<std::vector<std::string>>& phrases() const { return phrases_; }

 private:
  std::vector<std::vector<std::string>> phrases_;
};

/// Rewrites a question stem and one answer option into a declarative statement.
///
/// A phrase-table match is replaced as a whole; otherwise the first wh-word
/// (which, what, where, when, who) is replaced by the option. Stems whose
/// wh-word is "how", or that have none, get the option appended as a new
/// sentence. The search looks at the question sentence (the last one ending in
/// '?') before the rest of a multi-sentence stem. Whitespace is normalized,
/// the rewritten sentence's '?' becomes '.', and the first letter is
/// capitalized.
class HypothesisGenerator {
 public:
  HypothesisGenerator() : HypothesisGenerator(PhraseTable::builtin()) {}
  explicit HypothesisGenerator(PhraseTable phrases) : phrases_(std::move(phrases)) {}

  Hypothesis generate(std::string_view stem, std::string_view option, std::string question_id = {},
                      std::string option_label = {}) const;

 private:
  PhraseTable phrases_;
};

Hypothesis generate_hypothesis(std::string_view stem, std::string_view option);

}  // namespace sciqa
