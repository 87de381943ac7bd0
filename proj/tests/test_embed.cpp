#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "model_checks.hpp"
#include "test_util.hpp"

using namespace sciqa;

TEST_CASE("propagation matches the unrolled loops and the frozen values") {
  const double unrolled = modelcheck::propagation_oracle_error();
  const double frozen = modelcheck::frozen_error();
  MESSAGE("unrolled " << unrolled << ", frozen " << frozen);
  CHECK(unrolled <= 1e-14);
  CHECK(frozen <= 1e-14);
}

TEST_CASE("encoder") {
  const auto p = modelcheck::formula_params();
  const Vector a = encode_text("fruit seed", p);
  const Vector b = encode_text("seed fruit", p);
  CHECK(a.size() == 2);
  CHECK((a - b).norm() > 1e-6);  // word order matters
  // Unknown words share the <unk> column, as does empty text.
  CHECK(encode_text("zebra", p) == encode_text("quark", p));
  CHECK(encode_text("", p) == encode_text("zebra", p));
  CHECK((encode_text("fruit", p) - encode_text("zebra", p)).norm() > 1e-6);
}

TEST_CASE("disconnected components do not interact") {
  const auto p = modelcheck::formula_params(modelcheck::small_config(3));
  auto g = modelcheck::path_graph();
  const Matrix alone = propagate(g, p);
  g.add_node("seed", NodeKind::entity);
  g.add_node("contain", NodeKind::predicate);
  g.add_edge(3, 4, EdgeLabel::subj);
  g.add_edge(4, 0, EdgeLabel::loc);
  const Matrix linked = propagate(g, p);
  CHECK((linked.leftCols(3) - alone).norm() > 1e-6);
  KnowledgeGraph h = modelcheck::path_graph();
  h.add_node("seed", NodeKind::entity);
  h.add_node("contain", NodeKind::predicate);
  h.add_edge(3, 4, EdgeLabel::subj);
  const Matrix apart = propagate(h, p);
  CHECK((apart.leftCols(3) - alone).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scoring properties") {
  const auto fails = modelcheck::scoring_property_failures(1000, 99);
  for (const auto& f : fails) MESSAGE("violated: " << f);
  CHECK(fails.empty());

  Matrix m(2, 3);
  m << 1, 1, 0,
       0, 0, 1;
  const auto s = score_embeddings(m, {0, 1}, m, {0, 1, 2});
  CHECK(s.hypothesis_node == 0);  // exact tie between (0,0), (0,1), (1,0), (1,1)
  CHECK(s.support_node == 0);
  CHECK(s.value == doctest::Approx(sigmoid(0.5)).epsilon(1e-15));
  Matrix z = Matrix::Zero(2, 1);
  CHECK(score_embeddings(z, {0}, m, {0}).best_cosine == 0.0);
  const auto empty = score_embeddings(m, {0}, m, {});
  CHECK(empty.flagged);
  CHECK(empty.value == sigmoid(-1.5));
}

TEST_CASE("loss") {
  PairScore s;
  s.value = sigmoid(0.5);
  CHECK(loss(s, 1) == doctest::Approx(0.47407698418010663).epsilon(1e-15));
  CHECK(std::abs(loss(s, 1) - 0.4741) < 5e-5);
  s.value = 0.5;
  CHECK(loss(s, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(loss(s, 2), Error);
}

TEST_CASE("finite-difference gradient check") {
  const auto r = modelcheck::gradient_check(100, 2718);
  for (const auto& [name, e] : r.max_rel_error) {
    MESSAGE(name << ": max rel " << e << " over " << r.nonzero_entries.at(name) << " entries, max abs (tiny) "
                 << r.max_abs_error.at(name));
  }
  MESSAGE("pairs " << r.pairs << ", skipped near ties " << r.skipped_near_ties);
  CHECK(r.pairs == 100);
  CHECK(r.passed());
}

TEST_CASE("flagged pairs carry no gradient") {
  TrainingExample ex;
  ex.pair.hypothesis_graph = modelcheck::path_graph();
  ex.label = 1;
  const auto p = modelcheck::formula_params();
  const auto r = loss_and_gradient(ex, p);
  CHECK(r.score.flagged);
  CHECK(r.loss == doctest::Approx(-std::log(sigmoid(-1.5))));
  r.gradient.for_each([](const char*, const Matrix& m) { CHECK(m.isZero(0.0)); });
}

TEST_CASE("model files") {
  testutil::TempDir dir("model");
  ModelConfig cfg = modelcheck::small_config(3, Neighborhood::outgoing);
  Vocabulary vocab;
  vocab.add("fruit");
  vocab.add("seed");
  const auto p = ModelParams::init(cfg, vocab, 42);
  const auto path = dir / "m.bin";
  save_model(path, p);
  const auto q = load_model(path);
  CHECK(q.checksum() == p.checksum());
  CHECK(q.vocab.words() == p.vocab.words());
  CHECK(q.seed == 42);
  CHECK(q.config.steps == 3);
  CHECK(q.config.neighborhood == Neighborhood::outgoing);
  std::size_t k = 0;
  std::vector<const Matrix*> orig;
  p.tensors.for_each([&](const char*, const Matrix& m) { orig.push_back(&m); });
  q.tensors.for_each([&](const char*, const Matrix& m) { CHECK(m == *orig[k++]); });

  CHECK(ModelParams::init(cfg, vocab, 42).checksum() == p.checksum());
  CHECK(ModelParams::init(cfg, vocab, 43).checksum() != p.checksum());

  auto bytes = read_file(path);
  auto tampered = bytes;
  tampered[tampered.size() - 3] ^= 0x01;
  write_file(dir / "t.bin", tampered);
  CHECK_THROWS_AS(load_model(dir / "t.bin"), Error);
  write_file(dir / "t.bin", bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(load_model(dir / "t.bin"), Error);
  write_file(dir / "t.bin", bytes + "x");
  CHECK_THROWS_AS(load_model(dir / "t.bin"), Error);
  write_file(dir / "t.bin", "NOTAMODEL");
  CHECK_THROWS_AS(load_model(dir / "t.bin"), Error);
  CHECK_THROWS_AS(load_model(dir / "missing.bin"), Error);
}

TEST_CASE("configuration checks") {
  ModelConfig c;
  CHECK_NOTHROW(c.validate());
  c.steps = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ModelConfig{};
  c.init_scale = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_neighborhood("incoming") == Neighborhood::incoming);
  CHECK(to_string(Neighborhood::both) == "both");
  CHECK_THROWS_AS(parse_neighborhood("sideways"), Error);
}

TEST_CASE("argmax labels") {
  CHECK(argmax_labels({{"A", 0.5}, {"B", 0.5}, {"C", 0.1}}) == std::vector<std::string>{"A", "B"});
  CHECK(argmax_labels({{"A", 0.2}, {"B", 0.5}, {"C", 0.1}}) == std::vector<std::string>{"B"});
  CHECK(argmax_labels({}).empty());
}

TEST_CASE("non-finite embeddings still select a pair") {
  Matrix m(2, 2);
  m << std::nan(""), 1,
       0, 1;
  const auto s = score_embeddings(m, {0}, m, {0, 1});
  CHECK(s.hypothesis_node == 0);
  CHECK(s.support_node == 0);
  CHECK(std::isnan(s.value));
}

TEST_CASE("scores do not depend on node numbering") {
  std::mt19937_64 rng(31);
  ModelConfig cfg = modelcheck::small_config(2);
  cfg.init_scale = 0.5;
  for (int round = 0; round < 50; ++round) {
    GraphPair pair;
    pair.hypothesis_graph = modelcheck::random_graph(rng, 6);
    pair.support_graph = modelcheck::random_graph(rng, 10);
    auto params = ModelParams::init(cfg, Vocabulary::from_graphs({&pair.hypothesis_graph, &pair.support_graph}), rng());
    const double base = score_pair(pair, params).value;
    for (auto* g : {&pair.hypothesis_graph, &pair.support_graph}) {
      std::vector<int> perm(g->nodes().size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<int> inverse(perm.size());
      for (std::size_t i = 0; i < perm.size(); ++i) inverse[std::size_t(perm[i])] = int(i);
      KnowledgeGraph permuted;
      for (int old_id : perm) permuted.add_node(g->nodes()[std::size_t(old_id)].text, g->nodes()[std::size_t(old_id)].kind);
      auto edges = g->edges();
      std::shuffle(edges.begin(), edges.end(), rng);
      for (const auto& e : edges) permuted.add_edge(inverse[std::size_t(e.from)], inverse[std::size_t(e.to)], e.label);
      *g = permuted;
    }
    // Summation order changes, so equality is up to rounding.
    CHECK(score_pair(pair, params).value == doctest::Approx(base).epsilon(1e-12));
  }
}
