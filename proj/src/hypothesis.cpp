#include "sciqa/hypothesis.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <sstream>

#include "sciqa/common.hpp"
#include "sciqa/lexicon.hpp"
#include "sciqa/resources.hpp"

namespace sciqa {

namespace {

constexpr std::array<std::string_view, 6> kWhWords = {"which", "what", "where", "when", "who", "how"};

bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

struct Match {
  std::size_t begin = 0;  // byte range in the stem
  std::size_t end = 0;
  HypothesisRule rule = HypothesisRule::append;
};

struct Sentence {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the terminal punctuation, if any
};

std::vector<Sentence> split_sentences(std::string_view text) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminal(text[i]) && (i + 1 == text.size() || text[i + 1] == ' ')) {
      out.push_back({start, i + 1});
      start = i + 2;
    }
  }
  if (start < text.size()) out.push_back({start, text.size()});
  return out;
}

std::optional<Match> find_in(const std::vector<Token>& tokens, const PhraseTable& phrases,
                             std::size_t lo, std::size_t hi) {
  // Indices of word tokens inside [lo, hi).
  std::vector<std::size_t> words;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].is_word && tokens[i].begin >= lo && tokens[i].end <= hi) words.push_back(i);
  }
  // Earliest phrase occurrence; phrases are sorted longest-first so the first
  // phrase matching at a position is the longest one there.
  std::optional<Match> best;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (const auto& phrase : phrases.phrases()) {
      if (w + phrase.size() > words.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < phrase.size() && ok; ++k) {
        const auto idx = words[w + k];
        ok = tokens[idx].lower == phrase[k] && (k == 0 || words[w + k] == words[w + k - 1] + 1);
      }
      if (ok) {
        best = Match{tokens[words[w]].begin, tokens[words[w + phrase.size() - 1]].end,
                     HypothesisRule::wh_phrase_replace};
        break;
      }
    }
    if (best) return best;
  }
  for (auto w : words) {
    const auto& lower = tokens[w].lower;
    if (std::find(kWhWords.begin(), kWhWords.end(), lower) != kWhWords.end()) {
      if (lower == "how") return Match{0, 0, HypothesisRule::append};
      return Match{tokens[w].begin, tokens[w].end, HypothesisRule::wh_replace};
    }
  }
  return std::nullopt;
}

std::string strip_terminal(std::string s) {
  while (!s.empty() && (is_terminal(s.back()) || s.back() == ' ')) s.pop_back();
  return s;
}

void capitalize_at(std::string& s, std::size_t pos) {
  if (pos < s.size()) s[pos] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[pos])));
}

}  // namespace

std::string to_string(HypothesisRule rule) {
  switch (rule) {
    case HypothesisRule::wh_replace: return "wh-replace";
    case HypothesisRule::wh_phrase_replace: return "wh-phrase-replace";
    case HypothesisRule::append: return "append";
  }
  return "?";
}

PhraseTable PhraseTable::parse(std::string_view contents) {
  PhraseTable table;
  std::istringstream in{std::string(contents)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto words = word_tokens(t);
    if (!words.empty()) table.phrases_.push_back(std::move(words));
  }
  std::stable_sort(table.phrases_.begin(), table.phrases_.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return table;
}

PhraseTable PhraseTable::load(const std::string& path) { return parse(read_file(path)); }

const PhraseTable& PhraseTable::builtin() {
  static const PhraseTable table = parse(builtin_resource("wh_phrases.txt"));
  return table;
}

Hypothesis HypothesisGenerator::generate(std::string_view stem_in, std::string_view option_in,
                                         std::string question_id, std::string option_label) const {
  const std::string stem = collapse_whitespace(stem_in);
  const std::string option = strip_terminal(collapse_whitespace(option_in));
  if (stem.empty() || option.empty()) throw Error("hypothesis generation needs a nonempty stem and option");

  Hypothesis h;
  h.question_id = std::move(question_id);
  h.option_label = std::move(option_label);

  const auto tokens = tokenize(stem);
  const auto sentences = split_sentences(stem);
  // The question sentence is the last one ending in '?', else the last one.
  std::size_t q = sentences.size() - 1;
  for (std::size_t i = sentences.size(); i-- > 0;) {
    if (stem[sentences[i].end - 1] == '?') {
      q = i;
      break;
    }
  }
  std::optional<Match> match = find_in(tokens, phrases_, sentences[q].begin, sentences[q].end);
  if (!match) match = find_in(tokens, phrases_, 0, stem.size());

  if (!match || match->rule == HypothesisRule::append) {
    h.text = strip_terminal(stem) + ". " + option + ".";
    h.rule_applied = HypothesisRule::append;
    capitalize_at(h.text, 0);
    return h;
  }

  // Sentence holding the match: its '?' becomes '.'.
  const Sentence* host = &sentences.front();
  for (const auto& s : sentences) {
    if (match->begin >= s.begin && match->begin < s.end) host = &s;
  }
  std::string text = stem.substr(0, match->begin) + option + stem.substr(match->end);
  const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(option.size()) -
                               static_cast<std::ptrdiff_t>(match->end - match->begin);
  const std::size_t host_end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(host->end) + shift);
  if (host_end > 0 && text[host_end - 1] == '?') text[host_end - 1] = '.';
  if (match->begin == host->begin) capitalize_at(text, match->begin);
  if (!text.empty() && !is_terminal(text.back())) text.push_back('.');
  if (text.back() == '?') text.back() = '.';
  capitalize_at(text, 0);
  h.text = std::move(text);
  h.rule_applied = match->rule;
  return h;
}

Hypothesis generate_hypothesis(std::string_view stem, std::string_view option) {
  static const HypothesisGenerator generator;
  return generator.generate(stem, option);
}

}  // namespace sciqa
