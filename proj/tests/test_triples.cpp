#include <doctest.h>

#include <random>

#include "sciqa/kg.hpp"
#include "sciqa/triples.hpp"
#include "test_util.hpp"

using namespace sciqa;

namespace {

bool contains_ci(const std::string& hay, const std::string& needle) {
  return to_lower(hay).find(to_lower(needle)) != std::string::npos;
}

std::string squeeze(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t') out += c;
  }
  return out;
}

}  // namespace

TEST_CASE("extraction examples") {
  RuleBasedExtractor ex;
  const auto t = ex.extract("Fruit contains seeds.", "s1");
  REQUIRE(t.size() == 1);
  CHECK(t[0].subject == "Fruit");
  CHECK(t[0].predicate == "contains");
  CHECK(t[0].objects == std::vector<std::string>{"seeds"});
  CHECK(t[0].source_sentence_id == "s1");
  CHECK(ex.extract("The the the.").empty());
  CHECK(ex.extract("").empty());
  CHECK(ex.extract("?!").empty());
}

TEST_CASE("passive, copula and adverbials") {
  RuleBasedExtractor ex;
  const auto& lex = Lexicon::builtin();
  SUBCASE("passive by-agent becomes the subject") {
    const auto t = ex.extract("Day and night are caused by the rotation of Earth.");
    REQUIRE(t.size() == 1);
    CHECK(normalize_entity(t[0].subject, lex) == "rotation of earth");
    CHECK(normalize_predicate(t[0].predicate, lex) == "cause");
    CHECK(normalize_entity(t[0].objects.at(0), lex) == "day and night");
  }
  SUBCASE("copula with a relational noun") {
    const auto t = ex.extract("An oak is a kind of tree.");
    REQUIRE(t.size() == 1);
    CHECK(normalize_predicate(t[0].predicate, lex) == "be kind of");
    CHECK(normalize_entity(t[0].objects.at(0), lex) == "tree");
  }
  SUBCASE("plain copula") {
    const auto t = ex.extract("The Sun is a star.");
    REQUIRE(t.size() == 1);
    CHECK(normalize_predicate(t[0].predicate, lex) == "be");
    CHECK(normalize_entity(t[0].objects.at(0), lex) == "star");
  }
  SUBCASE("time and location adverbials") {
    auto t = ex.extract("Bears hibernate during the winter.");
    REQUIRE(t.size() == 1);
    CHECK(t[0].objects.empty());
    CHECK(t[0].time == std::optional<std::string>("winter"));
    t = ex.extract("Fish live in the ocean.");
    REQUIRE(t.size() == 1);
    CHECK(t[0].location == std::optional<std::string>("ocean"));
    t = ex.extract("Frogs lay eggs in the pond in spring.");
    REQUIRE(t.size() == 1);
    CHECK(t[0].objects == std::vector<std::string>{"eggs"});
    CHECK(t[0].location == std::optional<std::string>("pond"));
    CHECK(t[0].time == std::optional<std::string>("spring"));
  }
  SUBCASE("non-adverbial prepositional phrases become extra objects") {
    const auto t = ex.extract("Plants absorb water through their roots.");
    REQUIRE(t.size() == 1);
    CHECK(t[0].objects.size() == 2);
    CHECK_FALSE(t[0].time.has_value());
  }
}

TEST_CASE("gold extraction recall") {
  RuleBasedExtractor ex;
  const auto& lex = Lexicon::builtin();
  const auto rows = testutil::read_tsv("extraction_gold.tsv");
  REQUIRE(rows.size() == 25);
  int recovered = 0;
  for (const auto& r : rows) {
    auto gold = split(r[1], '|');
    for (auto& g : gold) g = trim(g);
    bool hit = false;
    for (const auto& t : ex.extract(r[0], "g")) {
      auto args = t.objects;
      if (t.time) args.push_back(*t.time);
      if (t.location) args.push_back(*t.location);
      if (normalize_entity(t.subject, lex) != gold[0] || normalize_predicate(t.predicate, lex) != gold[1]) continue;
      for (const auto& o : args) hit = hit || normalize_entity(o, lex) == gold[2];
    }
    if (!hit) MESSAGE("missed: " << r[0]);
    recovered += hit;
  }
  MESSAGE("recovered " << recovered << "/25 gold triples");
  CHECK(recovered >= 18);
}

TEST_CASE("extracted phrases are spans of the sentence; extraction is deterministic") {
  RuleBasedExtractor ex;
  std::vector<std::string> sentences;
  for (const auto& r : testutil::read_tsv("extraction_gold.tsv")) sentences.push_back(r[0]);
  for (const auto& l : read_corpus_file(std::string(SCIQA_SOURCE_DIR) + "/data/sample/corpus.txt")) sentences.push_back(l.text);
  for (const auto& s : sentences) {
    const auto a = ex.extract(s, "x");
    CHECK(a == ex.extract(s, "x"));
    for (const auto& t : a) {
      CAPTURE(s);
      CHECK_NOTHROW(t.validate());
      CHECK(contains_ci(s, t.subject));
      CHECK(contains_ci(s, t.predicate));
      for (const auto& o : t.objects) CHECK(contains_ci(s, o));
      if (t.time) CHECK(contains_ci(s, *t.time));
      if (t.location) CHECK(contains_ci(s, *t.location));
    }
  }
}

TEST_CASE("interchange rows") {
  const auto t = parse_triple_row("s7 | fruit | contain | seed");
  CHECK(t.source_sentence_id == "s7");
  CHECK(t.subject == "fruit");
  CHECK(t.predicate == "contain");
  CHECK(t.objects == std::vector<std::string>{"seed"});
  const auto u = parse_triple_row("s8 | bear | hibernate |  | time=winter | loc=cave");
  CHECK(u.objects.empty());
  CHECK(*u.time == "winter");
  CHECK(*u.location == "cave");
  CHECK(format_triple(u) == "s8 | bear | hibernate |  | time=winter | loc=cave");

  CHECK_THROWS_AS(parse_triple_row("s1 | fruit |  | seed"), Error);             // empty predicate
  CHECK_THROWS_AS(parse_triple_row("s1 |  | contain | seed"), Error);           // empty subject
  CHECK_THROWS_AS(parse_triple_row("s1 | fruit | contain"), Error);             // too few fields
  CHECK_THROWS_AS(parse_triple_row("s1 | fruit | contain | seed | conf=0.9"), Error);
  CHECK_THROWS_AS(parse_triple_row("s1 | fruit | contain | "), Error);          // nothing but s and p
  CHECK_THROWS_AS(parse_triple_row("s1 | a | b | c;; d"), Error);
  CHECK_THROWS_AS(parse_triple_row(" | a | b | c"), Error);
  CHECK_THROWS_AS(parse_triple_row("s1 | a | b | c | time=x | time=y"), Error);
}

TEST_CASE("ingest reports the offending row") {
  const std::string file = "# header\ns1 | fruit | contain | seed\n\ns2 | oak |  | tree\n";
  try {
    parse_triples(file, "t.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.source() == "t.txt");
  }
  testutil::TempDir dir("triples");
  write_file(dir / "t.txt", "s2 | oak | be kind of | tree\ns1 | fruit | contain | seed\ns2 | oak | grow | \n");
  CHECK_THROWS_AS(ingest_triples(dir / "t.txt"), ParseError);
  write_file(dir / "t.txt", "s2 | oak | be kind of | tree\ns1 | fruit | contain | seed\ns2 | acorn | come from | oak\n");
  const auto m = ingest_triples(dir / "t.txt");
  CHECK(m.size() == 2);
  CHECK(m.at("s2").size() == 2);
  CHECK(m.at("s2")[1].subject == "acorn");
}

TEST_CASE("export(ingest(f)) == f on random rows") {
  std::mt19937 rng(2024);
  const std::vector<std::string> words{"fruit", "seed", "oak", "tree", "rotation", "of", "earth", "day", "night",
                                       "warm", "cold", "water", "vapor", "x2", "H2O", "Sun's", "well-known"};
  auto phrase = [&] {
    std::string p;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) p += (i ? " " : "") + words[rng() % words.size()];
    return p;
  };
  std::string file;
  std::string spaced;
  for (int i = 0; i < 100; ++i) {
    Triple t;
    t.source_sentence_id = "s" + std::to_string(1000 + i / 2);  // two rows per id, ids in sorted order
    t.subject = phrase();
    t.predicate = phrase();
    const int objs = static_cast<int>(rng() % 4);
    for (int k = 0; k < objs; ++k) t.objects.push_back(phrase());
    if (rng() % 3 == 0 || objs == 0) t.time = phrase();
    if (rng() % 3 == 0) t.location = phrase();
    const auto row = format_triple(t);
    file += row + "\n";
    // Same row with irregular spacing around separators.
    std::string messy;
    for (char c : row) {
      if (c == '|' || c == ';') messy += std::string(rng() % 3, ' ') + c + std::string(rng() % 3, ' ');
      else messy += c;
    }
    spaced += messy + "\n";
    CHECK(parse_triple_row(row) == t);
  }
  CHECK(export_triples(parse_triples(file)) == file);
  CHECK(squeeze(export_triples(parse_triples(spaced))) == squeeze(spaced));
}

TEST_CASE("ingested triples override the fallback by sentence id") {
  TripleMap m = parse_triples("s1 | rock | be | hard\n");
  IngestedExtractor with_fallback(m, std::make_shared<RuleBasedExtractor>());
  CHECK(with_fallback.extract("Anything at all.", "s1").at(0).subject == "rock");
  CHECK(with_fallback.extract("Fruit contains seeds.", "s2").at(0).subject == "Fruit");
  IngestedExtractor alone(m, nullptr);
  CHECK(alone.extract("Fruit contains seeds.", "s2").empty());
  CHECK(with_fallback.version().rfind("ingest:", 0) == 0);
  IngestedExtractor other(parse_triples("s1 | rock | be | soft\n"), nullptr);
  CHECK(other.version() != alone.version());
}
