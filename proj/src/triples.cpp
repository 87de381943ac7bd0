#include "sciqa/triples.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "sciqa/common.hpp"

namespace sciqa {

// ---------------------------------------------------------------------------
// Interchange format

namespace {

bool writable_phrase(std::string_view p) {
  return p.find_first_of("|;\n\r") == std::string_view::npos && trim(p) == p && !p.empty();
}

}  // namespace

void Triple::validate() const {
  if (trim(subject).empty()) throw Error("triple has an empty subject");
  if (trim(predicate).empty()) throw Error("triple has an empty predicate");
  if (objects.empty() && !time && !location) throw Error("triple has no object, time or location");
  auto check = [](std::string_view what, std::string_view p) {
    if (!writable_phrase(p)) throw Error("triple " + std::string(what) + " '" + std::string(p) + "' is not a clean phrase");
  };
  check("subject", subject);
  check("predicate", predicate);
  for (const auto& o : objects) check("object", o);
  if (time) check("time", *time);
  if (location) check("location", *location);
  if (source_sentence_id.find_first_of("|\n\r") != std::string::npos || trim(source_sentence_id) != source_sentence_id) {
    throw Error("triple sentence id '" + source_sentence_id + "' is not clean");
  }
}

std::string format_triple(const Triple& t) {
  std::string out = t.source_sentence_id + " | " + t.subject + " | " + t.predicate + " | ";
  for (std::size_t i = 0; i < t.objects.size(); ++i) {
    if (i > 0) out += "; ";
    out += t.objects[i];
  }
  if (t.time) out += " | time=" + *t.time;
  if (t.location) out += " | loc=" + *t.location;
  return out;
}

Triple parse_triple_row(std::string_view row) {
  auto fields = split(row, '|');
  if (fields.size() < 4) throw Error("expected at least 4 '|'-separated fields, got " + std::to_string(fields.size()));
  Triple t;
  t.source_sentence_id = trim(fields[0]);
  t.subject = trim(fields[1]);
  t.predicate = trim(fields[2]);
  auto objects = trim(fields[3]);
  if (!objects.empty()) {
    for (auto& o : split(objects, ';')) {
      auto p = trim(o);
      if (p.empty()) throw Error("empty object in object list");
      t.objects.push_back(std::move(p));
    }
  }
  for (std::size_t i = 4; i < fields.size(); ++i) {
    auto f = trim(fields[i]);
    auto eq = f.find('=');
    auto key = eq == std::string::npos ? f : trim(f.substr(0, eq));
    auto value = eq == std::string::npos ? std::string{} : trim(f.substr(eq + 1));
    if (key == "time") {
      if (t.time) throw Error("duplicate time field");
      t.time = value;
    } else if (key == "loc") {
      if (t.location) throw Error("duplicate loc field");
      t.location = value;
    } else {
      throw Error("unknown field '" + key + "'");
    }
  }
  if (t.source_sentence_id.empty()) throw Error("empty sentence id");
  t.validate();
  return t;
}

TripleMap parse_triples(std::string_view contents, const std::string& source) {
  TripleMap out;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      auto triple = parse_triple_row(t);
      auto id = triple.source_sentence_id;
      out[id].push_back(std::move(triple));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

TripleMap ingest_triples(const std::string& path) { return parse_triples(read_file(path), path); }

std::string export_triples(const TripleMap& triples) {
  std::string out;
  for (const auto& [id, list] : triples) {
    for (const auto& t : list) {
      out += format_triple(t);
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rule-based extractor

namespace {

constexpr std::array<std::string_view, 11> kRelationalNouns = {
    "part", "kind", "type", "form", "example", "member", "source", "unit", "group", "piece", "sort"};
constexpr std::array<std::string_view, 6> kParticles = {"down", "up", "out", "off", "away", "apart"};
constexpr std::array<std::string_view, 4> kAdverbialPreps = {"in", "at", "on", "during"};
// Subordinators that may introduce a clause used as the object of an
// object-less predicate ("occurs because earth rotates").
constexpr std::array<std::string_view, 8> kObjectClauseSubs = {"because", "since", "so", "when",
                                                                "if", "as", "until", "while"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& set, std::string_view w) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

struct Tagged {
  Token tok;
  std::string lemma;
  bool verb = false;
};

struct Span {
  std::size_t begin = 0;  // token indices, half-open
  std::size_t end = 0;
  bool empty() const { return begin >= end; }
};

struct Segment {
  Span prep;  // empty for the direct-object segment
  Span np;
};

class SentenceParser {
 public:
  SentenceParser(std::string_view sentence, const std::string& sentence_id, const Lexicon& lex)
      : text_(sentence), id_(sentence_id), lex_(lex) {
    for (auto& tok : tokenize(sentence)) {
      Tagged t;
      t.lemma = tok.is_word ? lex_.lemma(tok.lower) : tok.lower;
      t.verb = tok.is_word && lex_.is_verb(t.lemma);
      t.tok = std::move(tok);
      toks_.push_back(std::move(t));
    }
  }

  std::vector<Triple> run() {
    std::vector<Triple> out;
    const auto clauses = split_clauses();
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      const Span* next = c + 1 < clauses.size() ? &clauses[c + 1] : nullptr;
      extract_clause(clauses[c], next, out);
    }
    return out;
  }

 private:
  // -- token predicates ------------------------------------------------------
  bool word(std::size_t i) const { return i < toks_.size() && toks_[i].tok.is_word; }
  const std::string& lower(std::size_t i) const { return toks_[i].tok.lower; }
  bool cls(std::size_t i, WordClass c) const { return word(i) && lex_.has_class(lower(i), c); }
  bool content(std::size_t i) const { return word(i) && !lex_.is_function_word(lower(i)) && lower(i) != "'s"; }
  bool punct(std::size_t i, char c) const {
    return i < toks_.size() && !toks_[i].tok.is_word && toks_[i].tok.text.size() == 1 && toks_[i].tok.text[0] == c;
  }
  bool is_prep(std::size_t i) const { return cls(i, WordClass::prep) && lower(i) != "of"; }
  bool participle(std::size_t i) const {
    if (!word(i)) return false;
    const auto& w = lower(i);
    return w.ends_with("ed") || w.ends_with("en") || (toks_[i].lemma != w && !w.ends_with("s") && !w.ends_with("ing"));
  }

  bool boundary(std::size_t i) const {
    if (i >= toks_.size()) return true;
    if (!toks_[i].tok.is_word) {
      const auto& t = toks_[i].tok.text;
      return t == ";" || t == ":" || t == "." || t == "!" || t == "?" || t == "(" || t == ")";
    }
    const auto& w = lower(i);
    if (w == "that") return i > 0 && !is_prep(i - 1) && !toks_[i - 1].verb && content(i - 1);
    if (w == "so" || w == "as") return i > 0 && punct(i - 1, ',');
    if (w == "where" || w == "when" || w == "which" || w == "who" || w == "until") return i > 0;
    return cls(i, WordClass::sub);
  }

  std::vector<Span> split_clauses() const {
    std::vector<Span> clauses;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= toks_.size(); ++i) {
      if (i == toks_.size() || boundary(i)) {
        if (start < i) clauses.push_back({start, i});
        start = (i < toks_.size() && toks_[i].tok.is_word) ? i : i + 1;
        // A subordinating word opens the next clause; keep it as its first token.
      }
    }
    return clauses;
  }

  std::string text_of(Span s) const {
    if (s.empty()) return {};
    return std::string(text_.substr(toks_[s.begin].tok.begin, toks_[s.end - 1].tok.end - toks_[s.begin].tok.begin));
  }

  // Drops leading determiners/adverbs/conjunctions and trailing punctuation.
  Span clean_np(Span s) const {
    while (s.begin < s.end && (!word(s.begin) || cls(s.begin, WordClass::det) || cls(s.begin, WordClass::adv) ||
                               cls(s.begin, WordClass::conj) || cls(s.begin, WordClass::sub))) {
      ++s.begin;
    }
    while (s.end > s.begin && (!word(s.end - 1) || cls(s.end - 1, WordClass::conj))) --s.end;
    return s;
  }

  bool noun_like_verb(std::size_t i, std::size_t end) const {
    // "Green plants produce oxygen": a plural -s form directly followed by a
    // bare verb form is the subject head, not the predicate.
    return i + 1 < end && toks_[i + 1].verb && word(i + 1) && lower(i).ends_with("s") && !lower(i + 1).ends_with("s") &&
           !cls(i, WordClass::aux);
  }

  struct VerbGroup {
    Span span;
    std::size_t main = 0;  // main verb token, or the copula/aux head
    bool copula = false;
    bool passive = false;
  };

  // First verb group at or after `from` inside [from, end). A verb needs some
  // content word between `subject_start` and itself.
  std::optional<VerbGroup> find_verb_group(std::size_t subject_start, std::size_t from, std::size_t end) const {
    for (std::size_t i = from; i < end; ++i) {
      if (!word(i)) continue;
      bool content_before = false;
      for (std::size_t k = subject_start; k < i; ++k) content_before = content_before || content(k);
      if (!content_before) continue;
      const bool prev_blocks = i > 0 && (cls(i - 1, WordClass::det) || is_prep(i - 1) || lower(i - 1) == "of" ||
                                         lower(i - 1) == "'s");
      if (prev_blocks) continue;
      if (cls(i, WordClass::aux)) {
        std::size_t j = i;
        bool be = false;
        while (j < end && (cls(j, WordClass::aux) || cls(j, WordClass::neg) || cls(j, WordClass::adv))) {
          be = be || toks_[j].lemma == "be";
          ++j;
        }
        VerbGroup vg;
        if (j < end && word(j) && !cls(j, WordClass::det) && !is_prep(j) &&
            (toks_[j].verb || (be && participle(j)))) {
          vg.main = j;
          vg.passive = be && participle(j);
          vg.span = {i, j + 1};
        } else {
          std::size_t last = j;
          while (last > i && cls(last - 1, WordClass::adv)) --last;
          vg.main = i;
          vg.copula = be;
          vg.span = {i, last};
        }
        if (vg.span.end < end && word(vg.span.end) && one_of(kParticles, lower(vg.span.end))) ++vg.span.end;
        return vg;
      }
      if (toks_[i].verb && !noun_like_verb(i, end)) {
        VerbGroup vg;
        vg.main = i;
        vg.span = {i, i + 1};
        if (i + 1 < end && word(i + 1) && one_of(kParticles, lower(i + 1))) ++vg.span.end;
        return vg;
      }
    }
    return std::nullopt;
  }

  // Subject NP: walk back from the verb group over noun-phrase material.
  Span subject_before(std::size_t clause_begin, std::size_t vg_begin) const {
    std::size_t e = vg_begin;
    while (e > clause_begin && cls(e - 1, WordClass::adv)) --e;
    std::size_t b = e;
    while (b > clause_begin) {
      const std::size_t k = b - 1;
      if (!word(k)) break;
      if (is_prep(k) || cls(k, WordClass::sub) || cls(k, WordClass::aux)) break;
      if (cls(k, WordClass::conj)) {
        if (!(k > clause_begin && content(k - 1) && content(k + 1))) break;
      }
      b = k;
    }
    return clean_np({b, e});
  }

  std::vector<Segment> segments(Span region) const {
    std::vector<Segment> segs;
    std::size_t i = region.begin;
    auto read_np = [&](std::size_t from) {
      std::size_t j = from;
      while (j < region.end && !(is_prep(j) && j > from)) ++j;
      return Span{from, j};
    };
    while (i < region.end) {
      if (!word(i) && !punct(i, ',')) {
        ++i;
        continue;
      }
      if (is_prep(i) || (lower(i) == "because" && i + 1 < region.end && lower(i + 1) == "of")) {
        std::size_t p = i + 1;
        while (p < region.end && is_prep(p)) ++p;  // "due to", "out of"
        if (lower(i) == "because") p = i + 2;
        auto np = read_np(p);
        segs.push_back({Span{i, p}, np});
        i = std::max(np.end, p);
      } else {
        auto np = read_np(i);
        segs.push_back({Span{}, np});
        i = np.end;
      }
    }
    return segs;
  }

  std::optional<std::size_t> conjoined_verb(Span region) const {
    for (std::size_t i = region.begin; i < region.end; ++i) {
      if (!cls(i, WordClass::conj)) continue;
      std::size_t j = i + 1;
      while (j < region.end && cls(j, WordClass::adv)) ++j;
      if (j < region.end && (toks_[j].verb || cls(j, WordClass::aux)) && !cls(j, WordClass::det)) {
        return i;
      }
    }
    return std::nullopt;
  }

  void extract_clause(Span clause, const Span* next_clause, std::vector<Triple>& out) const {
    std::size_t subject_start = clause.begin;
    // A leading prepositional phrase closed by a comma is not the subject.
    for (std::size_t i = clause.begin; i < clause.end; ++i) {
      if (punct(i, ',') && is_prep(clause.begin)) {
        subject_start = i + 1;
        break;
      }
    }
    auto vg = find_verb_group(subject_start, subject_start, clause.end);
    if (!vg) return;
    Span subject = subject_before(subject_start, vg->span.begin);
    std::size_t cursor = vg->span.begin;
    bool first = true;
    while (vg) {
      Span region{vg->span.end, clause.end};
      std::optional<VerbGroup> following;
      if (auto conj = conjoined_verb(region)) {
        region.end = *conj;
        std::size_t j = *conj + 1;
        following = find_verb_group(subject_start, j, clause.end);
      }
      emit(*vg, subject, region, first ? next_clause : nullptr, clause, out);
      first = false;
      if (!following || following->span.begin <= cursor) break;
      cursor = following->span.begin;
      vg = following;
    }
  }

  void emit(const VerbGroup& vg, Span subject, Span region, const Span* next_clause, Span clause,
            std::vector<Triple>& out) const {
    if (subject.empty()) return;
    auto segs = segments(region);
    Span predicate = vg.span;
    std::vector<Span> objects;
    std::optional<Span> time, loc;
    std::size_t first_pp = 0;
    Span direct{};
    if (!segs.empty() && segs.front().prep.empty()) {
      direct = clean_np(segs.front().np);
      first_pp = 1;
    }

    // Copula with a relational noun: "is a kind of tree" -> "is a kind of" + tree.
    if (vg.copula && !direct.empty() && direct.end - direct.begin >= 3 &&
        one_of(kRelationalNouns, toks_[direct.begin].lemma) && lower(direct.begin + 1) == "of") {
      predicate.end = direct.begin + 2;
      direct.begin += 2;
      direct = clean_np(direct);
    }

    Span agent{};
    for (std::size_t s = first_pp; s < segs.size(); ++s) {
      const auto& seg = segs[s];
      Span np = clean_np(seg.np);
      if (np.empty()) continue;
      const auto& prep = lower(seg.prep.begin);
      if (vg.passive && prep == "by" && agent.empty()) {
        agent = np;
        continue;
      }
      if (seg.prep.end - seg.prep.begin == 1 && one_of(kAdverbialPreps, prep)) {
        const auto& head = toks_[np.end - 1].lemma;
        const auto& head_form = lower(np.end - 1);
        if (!time && (prep == "during" || lex_.is_time_noun(head) || lex_.is_time_noun(head_form))) {
          time = np;
          continue;
        }
        if (!loc && (lex_.is_location_noun(head) || lex_.is_location_noun(head_form))) {
          loc = np;
          continue;
        }
      }
      // A preposition right after an object-less verb joins the predicate.
      if (direct.empty() && objects.empty() && s == first_pp && seg.prep.begin == predicate.end && !vg.passive) {
        predicate.end = seg.prep.end;
        objects.push_back(np);
        continue;
      }
      objects.push_back(np);
    }

    Triple t;
    t.source_sentence_id = id_;
    if (vg.passive && !agent.empty()) {
      t.subject = text_of(agent);
      t.predicate = text_of(Span{vg.main, vg.span.end});
      t.objects.push_back(text_of(subject));
      if (!direct.empty()) t.objects.push_back(text_of(direct));
    } else {
      t.subject = text_of(subject);
      t.predicate = text_of(predicate);
      if (!direct.empty()) t.objects.push_back(text_of(direct));
    }
    for (auto o : objects) t.objects.push_back(text_of(o));
    if (time) t.time = text_of(*time);
    if (loc) t.location = text_of(*loc);

    // "occurs because earth rotates": the following clause becomes the object.
    if (t.objects.empty() && !t.time && !t.location && next_clause != nullptr && region.end == clause.end &&
        word(next_clause->begin) && one_of(kObjectClauseSubs, lower(next_clause->begin)) &&
        predicate.end == next_clause->begin) {
      Span rest = clean_np({next_clause->begin + 1, next_clause->end});
      if (!rest.empty()) {
        t.predicate = text_of(Span{predicate.begin, next_clause->begin + 1});
        t.objects.push_back(text_of(rest));
      }
    }
    std::erase_if(t.objects, [](const std::string& o) { return o.empty(); });
    try {
      t.validate();
    } catch (const Error&) {
      return;
    }
    out.push_back(std::move(t));
  }

  std::string_view text_;
  std::string id_;
  const Lexicon& lex_;
  std::vector<Tagged> toks_;
};

}  // namespace

std::vector<Triple> RuleBasedExtractor::extract(std::string_view sentence, const std::string& sentence_id) const {
  if (trim(sentence).empty()) return {};
  return SentenceParser(sentence, sentence_id, *lexicon_).run();
}

IngestedExtractor::IngestedExtractor(TripleMap triples, std::shared_ptr<const TripleExtractor> fallback)
    : triples_(std::move(triples)), fallback_(std::move(fallback)) {}

std::vector<Triple> IngestedExtractor::extract(std::string_view sentence, const std::string& sentence_id) const {
  if (auto it = triples_.find(sentence_id); it != triples_.end()) return it->second;
  if (fallback_) return fallback_->extract(sentence, sentence_id);
  return {};
}

std::string IngestedExtractor::version() const {
  return "ingest:" + sha256_hex(export_triples(triples_)).substr(0, 16) +
         (fallback_ ? "+" + fallback_->version() : std::string{});
}

}  // namespace sciqa
