#include "sciqa/lexicon.hpp"

#include <array>
#include <cctype>
#include <filesystem>
#include <sstream>

#include "sciqa/common.hpp"
#include "sciqa/resources.hpp"

namespace sciqa {

namespace {

bool is_word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

constexpr std::array<std::string_view, 7> kClitics = {"'s", "n't", "'re", "'ve", "'ll", "'d", "'m"};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  for (char c : s) {
    if (is_vowel(c) || c == 'y') return true;
  }
  return false;
}

bool ends_with(std::string_view s, std::string_view suffix) { return s.ends_with(suffix); }

bool is_consonant_at(std::string_view s, std::size_t i) { return !is_vowel(s[i]); }

// Restores the base form of a stem left after removing -ed/-ing.
std::string repair_stem(std::string stem) {
  const auto n = stem.size();
  const char last = stem[n - 1];
  if (n >= 2 && last == stem[n - 2] && !is_vowel(last) && last != 'l' && last != 's' && last != 'z') {
    stem.pop_back();
    return stem;
  }
  auto add_e = [&] { return stem + "e"; };
  if (last == 'v' || last == 'c' || last == 'z') return add_e();
  if (n >= 3) {
    const char prev = stem[n - 2];
    const bool prev2_consonant = is_consonant_at(stem, n - 3);
    if (prev == 'a' && last == 't' && prev2_consonant) return add_e();
    if (prev == 'u' && last == 't' && prev2_consonant) return add_e();
    if (prev == 'i' && last == 'n' && prev2_consonant) return add_e();
    if ((prev == 'i' || prev == 'u') && last == 'r' && prev2_consonant) return add_e();
    if (last == 's' && is_vowel(prev) && prev2_consonant) return add_e();
    if (last == 's' && is_vowel(prev) && is_vowel(stem[n - 3])) return add_e();
    if (last == 's' && !is_vowel(prev) && prev != 's') return add_e();
    if (last == 'd' && prev != 'e' && is_vowel(prev) && prev2_consonant) return add_e();
    if (last == 'l' && !is_vowel(prev) && prev != 'r' && prev != 'l' && prev != 'w') return add_e();
    if (last == 'g' && (prev == 'r' || prev == 'd' || prev == 'l')) return add_e();
  }
  if (n >= 3 && n <= 4) {
    const char a = stem[n - 3], b = stem[n - 2], c = stem[n - 1];
    if (!is_vowel(a) && is_vowel(b) && !is_vowel(c) && c != 'w' && c != 'x' && c != 'y') return add_e();
  }
  return stem;
}

template <typename Fn>
void for_each_entry(std::string_view contents, Fn&& fn) {
  std::istringstream in{std::string(contents)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    fn(t);
  }
}

std::unordered_set<std::string> word_set(std::string_view contents) {
  std::unordered_set<std::string> out;
  for_each_entry(contents, [&](const std::string& w) { out.insert(to_lower(w)); });
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  const std::size_t n = text.size();
  std::size_t i = 0;
  auto push = [&](std::size_t b, std::size_t e, bool word) {
    Token t;
    t.text = std::string(text.substr(b, e - b));
    t.lower = to_lower(t.text);
    t.begin = b;
    t.end = e;
    t.is_word = word;
    tokens.push_back(std::move(t));
  };
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '\'') {
      bool matched = false;
      for (auto clitic : kClitics) {
        if (clitic.front() != '\'') continue;
        auto len = clitic.size();
        if (i + len <= n && to_lower(text.substr(i, len)) == clitic &&
            (i + len == n || !is_word_byte(text[i + len]))) {
          push(i, i + len, true);
          i += len;
          matched = true;
          break;
        }
      }
      if (!matched) {
        push(i, i + 1, false);
        ++i;
      }
      continue;
    }
    if (!is_word_byte(c)) {
      push(i, i + 1, false);
      ++i;
      continue;
    }
    if (i + 3 <= n && to_lower(text.substr(i, 3)) == "n't" && (i + 3 == n || !is_word_byte(text[i + 3]))) {
      push(i, i + 3, true);
      i += 3;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n) {
      if (is_word_byte(text[j])) {
        ++j;
      } else if ((text[j] == '-' || text[j] == '.') && j + 1 < n && is_word_byte(text[j + 1]) &&
                 (text[j] == '-' || (std::isdigit(static_cast<unsigned char>(text[j - 1])) &&
                                     std::isdigit(static_cast<unsigned char>(text[j + 1]))))) {
        ++j;
      } else {
        break;
      }
    }
    // "don't" -> "do" + "n't"
    if (j + 1 < n && text[j] == '\'' && (text[j - 1] == 'n' || text[j - 1] == 'N') && j - 1 > i &&
        (text[j + 1] == 't' || text[j + 1] == 'T') && (j + 2 == n || !is_word_byte(text[j + 2]))) {
      push(i, j - 1, true);
      push(j - 1, j + 2, true);
      i = j + 2;
      continue;
    }
    push(i, j, true);
    i = j;
  }
  return tokens;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) {
    if (t.is_word) out.push_back(std::move(t.lower));
  }
  return out;
}

Lexicon::Lexicon(const Sources& sources) {
  for_each_entry(sources.lemmas, [&](const std::string& line) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("lemma table line without tab: " + line);
    auto form = to_lower(trim(line.substr(0, tab)));
    auto lemma = to_lower(trim(line.substr(tab + 1)));
    if (form.empty() || lemma.empty()) throw Error("empty lemma table entry: " + line);
    lemmas_[form] = lemma;
  });
  // Every lemma must be a fixed point of the map.
  std::vector<std::string> targets;
  for (const auto& [form, lemma] : lemmas_) targets.push_back(lemma);
  for (const auto& lemma : targets) {
    auto it = lemmas_.find(lemma);
    if (it == lemmas_.end()) {
      lemmas_.emplace(lemma, lemma);
    } else if (it->second != lemma) {
      throw Error("lemma table is not idempotent: '" + lemma + "' maps to '" + it->second + "'");
    }
  }
  stop_words_ = word_set(sources.stop_words);
  verbs_ = word_set(sources.verbs);
  time_nouns_ = word_set(sources.time_nouns);
  location_nouns_ = word_set(sources.location_nouns);
  for_each_entry(sources.function_words, [&](const std::string& line) {
    std::istringstream ls(line);
    std::string tag, word;
    ls >> tag >> word;
    static const std::unordered_map<std::string, WordClass> kTags = {
        {"det", WordClass::det},   {"pron", WordClass::pron}, {"prep", WordClass::prep},
        {"aux", WordClass::aux},   {"neg", WordClass::neg},   {"conj", WordClass::conj},
        {"sub", WordClass::sub},   {"wh", WordClass::wh},     {"adv", WordClass::adv}};
    auto it = kTags.find(tag);
    if (it == kTags.end() || word.empty()) throw Error("bad function-word entry: " + line);
    classes_[to_lower(word)] |= 1u << static_cast<unsigned>(it->second);
  });
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lexicon(Sources{
      std::string(builtin_resource("lexicon/lemmas.tsv")),
      std::string(builtin_resource("lexicon/stopwords.txt")),
      std::string(builtin_resource("lexicon/verbs.txt")),
      std::string(builtin_resource("lexicon/function_words.txt")),
      std::string(builtin_resource("lexicon/time_nouns.txt")),
      std::string(builtin_resource("lexicon/location_nouns.txt")),
  });
  return lexicon;
}

Lexicon Lexicon::from_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  auto read = [&](const char* name) { return read_file((fs::path(dir) / name).string()); };
  return Lexicon(Sources{read("lemmas.tsv"), read("stopwords.txt"), read("verbs.txt"),
                         read("function_words.txt"), read("time_nouns.txt"),
                         read("location_nouns.txt")});
}

bool Lexicon::has_class(std::string_view word, WordClass cls) const {
  auto it = classes_.find(std::string(word));
  return it != classes_.end() && (it->second & (1u << static_cast<unsigned>(cls))) != 0;
}

bool Lexicon::is_function_word(std::string_view word) const {
  return classes_.contains(std::string(word));
}

std::string Lexicon::apply_rules(const std::string& w) const {
  const auto n = w.size();
  if (n <= 3) return w;
  for (char c : w) {
    if (!std::isalpha(static_cast<unsigned char>(c))) return w;
  }
  if (ends_with(w, "ies")) return n > 4 ? w.substr(0, n - 3) + "y" : w.substr(0, n - 1);
  if (ends_with(w, "sses")) return w.substr(0, n - 2);
  if (ends_with(w, "shes") || ends_with(w, "ches") || ends_with(w, "xes")) return w.substr(0, n - 2);
  if (ends_with(w, "s")) {
    if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
    return n - 1 >= 3 ? w.substr(0, n - 1) : w;
  }
  if (ends_with(w, "ing")) {
    auto stem = w.substr(0, n - 3);
    if (stem.size() >= 3 && has_vowel(stem)) return repair_stem(stem);
    return w;
  }
  if (ends_with(w, "ed") && !ends_with(w, "eed")) {
    auto stem = w.substr(0, n - 2);
    if (stem.size() >= 3 && has_vowel(stem)) {
      if (stem.back() == 'i') return stem.substr(0, stem.size() - 1) + "y";
      return repair_stem(stem);
    }
  }
  return w;
}

std::string Lexicon::lemma(std::string_view word) const {
  std::string w = to_lower(word);
  for (;;) {
    if (auto it = lemmas_.find(w); it != lemmas_.end()) return it->second;
    auto next = apply_rules(w);
    if (next == w) return w;
    w = std::move(next);
  }
}

std::string lemmatize(std::string_view phrase, const Lexicon& lexicon) {
  std::string out;
  for (const auto& tok : tokenize(phrase)) {
    if (!tok.is_word) continue;
    auto lemma = lexicon.lemma(tok.lower);
    if (!out.empty()) out.push_back(' ');
    out += lemma;
  }
  if (out.empty()) return to_lower(phrase);
  return out;
}

}  // namespace sciqa
