#pragma once

// Independent reference computations for the graph model, shared by the unit
// tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sciqa/embed.hpp"

namespace modelcheck {

using namespace sciqa;

inline ModelConfig small_config(int steps = 2, Neighborhood hood = Neighborhood::both) {
  ModelConfig c;
  c.word_dim = 3;
  c.encoder_dim = 2;
  c.edge_dim = 2;
  c.node_dim = 3;
  c.hidden_dim = 4;
  c.steps = steps;
  c.neighborhood = hood;
  return c;
}

/// Tensor k entry (i, j) = 0.5 sin(1 + i + 2j + 3k); vocabulary fruit, contain, seed.
inline ModelParams formula_params(const ModelConfig& config = small_config()) {
  Vocabulary vocab;
  for (const char* w : {"fruit", "contain", "seed"}) vocab.add(w);
  auto p = ModelParams::init(config, vocab, 0);
  int k = 0;
  p.tensors.for_each([&](const char*, Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = 0.5 * std::sin(1.0 + double(i) + 2.0 * double(j) + 3.0 * k);
    }
    ++k;
  });
  return p;
}

/// fruit -subj-> contain -obj-> seed
inline KnowledgeGraph path_graph() {
  KnowledgeGraph g;
  g.add_node("fruit", NodeKind::entity);
  g.add_node("contain", NodeKind::predicate);
  g.add_node("seed", NodeKind::entity);
  g.add_edge(0, 1, EdgeLabel::subj);
  g.add_edge(1, 2, EdgeLabel::obj);
  return g;
}

/// Node-by-node propagation written with scalar loops over the edge list.
inline std::vector<std::vector<double>> unrolled_propagation(const KnowledgeGraph& g,
                                                             const std::vector<std::vector<double>>& x,
                                                             const ModelParams& p) {
  const auto& c = p.config;
  const auto& t = p.tensors;
  const std::size_t n = g.nodes().size();
  const int nd = c.node_dim, ed = c.edge_dim;
  std::vector<std::vector<double>> mu(n, std::vector<double>(nd, 0.0));
  for (int step = 0; step < c.steps; ++step) {
    std::vector<std::vector<double>> next(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<double> msg(nd + ed + 1, 0.0);
      for (const auto& e : g.edges()) {
        const int l = static_cast<int>(e.label);
        if (e.to == int(v) && c.neighborhood != Neighborhood::outgoing) {
          for (int i = 0; i < nd; ++i) msg[i] += mu[e.from][i];
          for (int i = 0; i < ed; ++i) msg[nd + i] += t.edge_embedding(i, l);
          msg[nd + ed] += 1.0;
        }
        if (e.from == int(v) && c.neighborhood != Neighborhood::incoming) {
          for (int i = 0; i < nd; ++i) msg[i] += mu[e.to][i];
          for (int i = 0; i < ed; ++i) msg[nd + i] += t.edge_embedding(i, l);
        }
      }
      std::vector<double> in;
      in.insert(in.end(), x[v].begin(), x[v].end());
      in.insert(in.end(), mu[v].begin(), mu[v].end());
      in.insert(in.end(), msg.begin(), msg.end());
      std::vector<double> hid(c.hidden_dim);
      for (int h = 0; h < c.hidden_dim; ++h) {
        double z = t.update_b1(h, 0);
        for (std::size_t i = 0; i < in.size(); ++i) z += t.update_w1(h, Eigen::Index(i)) * in[i];
        hid[h] = std::tanh(z);
      }
      next[v].resize(nd);
      for (int o = 0; o < nd; ++o) {
        double z = t.update_b2(o, 0);
        for (int h = 0; h < c.hidden_dim; ++h) z += t.update_w2(o, h) * hid[h];
        next[v][o] = std::tanh(z);
      }
    }
    mu = std::move(next);
  }
  return mu;
}

inline double max_abs_diff(const Matrix& m, const std::vector<std::vector<double>>& ref) {
  double worst = 0.0;
  for (std::size_t v = 0; v < ref.size(); ++v) {
    for (std::size_t i = 0; i < ref[v].size(); ++i) {
      worst = std::max(worst, std::abs(m(Eigen::Index(i), Eigen::Index(v)) - ref[v][i]));
    }
  }
  return worst;
}

/// Largest deviation of propagate_features from the unrolled loops on the
/// path graph, over 1..3 steps and all three neighborhoods.
inline double propagation_oracle_error() {
  double worst = 0.0;
  const auto g = path_graph();
  for (int steps = 1; steps <= 3; ++steps) {
    for (auto hood : {Neighborhood::incoming, Neighborhood::outgoing, Neighborhood::both}) {
      const auto p = formula_params(small_config(steps, hood));
      Matrix x(2, 3);
      std::vector<std::vector<double>> xs(3, std::vector<double>(2));
      for (int v = 0; v < 3; ++v) {
        for (int i = 0; i < 2; ++i) x(i, v) = xs[v][i] = std::cos(double(i + v));
      }
      worst = std::max(worst, max_abs_diff(propagate_features(g, x, p), unrolled_propagation(g, xs, p)));
    }
  }
  return worst;
}

/// mu^(2) of the path graph under formula_params, in node order, computed
/// separately with numpy: from features cos(i + v), and from the encoder.
inline const std::vector<double>& frozen_from_features() {
  static const std::vector<double> v{0.1779044377511433,  0.43073772499567137, 0.30781244053975654,
                                     0.27943358048046857, 0.4415404673532515,  0.22155732339986878,
                                     0.15117147141243073, 0.5209989962175109,  0.43976302068490236};
  return v;
}
inline const std::vector<double>& frozen_full() {
  static const std::vector<double> v{0.06375604276348133, 0.4438387539359551, 0.4232191043781364,
                                     0.36034168554852003, 0.551496532771154,  0.28514029614715924,
                                     0.28910635674070706, 0.5957127971057632, 0.4171341011232032};
  return v;
}

inline double frozen_error() {
  const auto g = path_graph();
  const auto p = formula_params();
  Matrix x(2, 3);
  for (int v = 0; v < 3; ++v) {
    for (int i = 0; i < 2; ++i) x(i, v) = std::cos(double(i + v));
  }
  const Matrix a = propagate_features(g, x, p);
  const Matrix b = propagate(g, p);
  double worst = 0.0;
  for (int k = 0; k < 9; ++k) {
    worst = std::max(worst, std::abs(a(k % 3, k / 3) - frozen_from_features()[std::size_t(k)]));
    worst = std::max(worst, std::abs(b(k % 3, k / 3) - frozen_full()[std::size_t(k)]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Gradient check

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w{"seed", "fruit", "oak", "tree", "water", "sun", "grow", "contain", "be", "of"};
  return w;
}

/// Random graph with 2..max_nodes nodes; every predicate node gets a subj edge.
inline KnowledgeGraph random_graph(std::mt19937_64& rng, int max_nodes = 10) {
  std::uniform_int_distribution<int> size(2, max_nodes);
  const int n = size(rng);
  KnowledgeGraph g;
  auto text = [&] {
    std::string s;
    const int len = 1 + int(rng() % 3);
    for (int i = 0; i < len; ++i) s += (i ? " " : "") + words()[rng() % words().size()];
    return s;
  };
  g.add_node(text(), NodeKind::entity);
  g.add_node(text(), NodeKind::predicate);
  for (int i = 2; i < n; ++i) g.add_node(text(), rng() % 3 == 0 ? NodeKind::predicate : NodeKind::entity);
  std::vector<int> ents;
  for (const auto& node : g.nodes()) {
    if (node.kind == NodeKind::entity) ents.push_back(node.id);
  }
  for (const auto& node : g.nodes()) {
    if (node.kind != NodeKind::predicate) continue;
    g.add_edge(ents[rng() % ents.size()], node.id, EdgeLabel::subj);
    const int extra = int(rng() % 3);
    for (int k = 0; k < extra; ++k) g.add_edge(node.id, ents[rng() % ents.size()], static_cast<EdgeLabel>(1 + rng() % 3));
  }
  return g;
}

/// Gap between the best and second-best predicate-pair cosine; small gaps
/// put a finite-difference step across the max's kink.
inline double cosine_gap(const GraphPair& pair, const ModelParams& p) {
  const Matrix h = propagate(pair.hypothesis_graph, p);
  const Matrix s = propagate(pair.support_graph, p);
  std::vector<double> cs;
  for (int u : pair.hypothesis_graph.predicate_nodes()) {
    for (int v : pair.support_graph.predicate_nodes()) {
      cs.push_back(h.col(u).dot(s.col(v)) / (h.col(u).norm() * s.col(v).norm()));
    }
  }
  if (cs.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(cs.rbegin(), cs.rend());
  return cs[0] - cs[1];
}

struct GradientReport {
  int pairs = 0;
  int skipped_near_ties = 0;
  std::map<std::string, double> max_rel_error;    // per tensor, over entries with a non-negligible gradient
  std::map<std::string, double> max_abs_error;    // per tensor, over entries with a negligible gradient
  std::map<std::string, int> nonzero_entries;
  bool passed(double rel_tol = 1e-4, double abs_tol = 1e-9) const {
    if (pairs == 0) return false;
    for (const auto& [name, e] : max_rel_error) {
      if (!(e < rel_tol) || nonzero_entries.at(name) == 0) return false;
    }
    for (const auto& [name, e] : max_abs_error) {
      if (!(e < abs_tol)) return false;
    }
    return true;
  }
};

/// Central differences with step h against loss_and_gradient on every entry
/// of every tensor, over `pairs` random graph pairs with T in {1, 2, 3}.
inline GradientReport gradient_check(int pairs, std::uint64_t seed, double h = 1e-5) {
  GradientReport report;
  std::mt19937_64 rng(seed);
  for (const char* name : ParamTensors::names()) {
    report.max_rel_error[name] = 0.0;
    report.max_abs_error[name] = 0.0;
    report.nonzero_entries[name] = 0;
  }
  const std::vector<Neighborhood> hoods{Neighborhood::incoming, Neighborhood::outgoing, Neighborhood::both};
  while (report.pairs < pairs) {
    TrainingExample ex;
    ex.pair.hypothesis_graph = random_graph(rng, 5);
    ex.pair.support_graph = random_graph(rng, 10);
    ex.label = int(rng() % 2);
    ModelConfig cfg;
    cfg.word_dim = 4;
    cfg.encoder_dim = 3;
    cfg.edge_dim = 2;
    cfg.node_dim = 3;
    cfg.hidden_dim = 4;
    cfg.steps = 1 + int(rng() % 3);
    cfg.neighborhood = hoods[rng() % 3];
    cfg.init_scale = 0.5;
    auto params = ModelParams::init(cfg, Vocabulary::from_graphs({&ex.pair.hypothesis_graph, &ex.pair.support_graph}), rng());
    if (cosine_gap(ex.pair, params) < 1e-3) {
      ++report.skipped_near_ties;
      continue;
    }
    const auto analytic = loss_and_gradient(ex, params);
    auto f = [&](const ModelParams& p) { return loss(score_pair(ex.pair, p), ex.label); };
    std::size_t k = 0;
    std::vector<const Matrix*> grads;
    analytic.gradient.for_each([&](const char*, const Matrix& m) { grads.push_back(&m); });
    params.tensors.for_each([&](const char* name, Matrix& m) {
      const Matrix& g = *grads[k++];
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double orig = m.data()[i];
        m.data()[i] = orig + h;
        const double up = f(params);
        m.data()[i] = orig - h;
        const double down = f(params);
        m.data()[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double a = g.data()[i];
        const double scale = std::max(std::abs(a), std::abs(numeric));
        if (scale > 1e-6) {
          report.max_rel_error[name] = std::max(report.max_rel_error[name], std::abs(a - numeric) / scale);
          ++report.nonzero_entries[name];
        } else {
          report.max_abs_error[name] = std::max(report.max_abs_error[name], std::abs(a - numeric));
        }
      }
    });
    ++report.pairs;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Scoring

inline double brute_force_score(const Matrix& h, const std::vector<int>& hp, const Matrix& s, const std::vector<int>& sp) {
  if (hp.empty() || sp.empty()) return 1.0 / (1.0 + std::exp(1.5));
  double best = -2.0;
  for (int u : hp) {
    for (int v : sp) {
      double dot = 0, nu = 0, nv = 0;
      for (Eigen::Index i = 0; i < h.rows(); ++i) {
        dot += h(i, u) * s(i, v);
        nu += h(i, u) * h(i, u);
        nv += s(i, v) * s(i, v);
      }
      const double c = (nu == 0 || nv == 0) ? 0.0 : dot / (std::sqrt(nu) * std::sqrt(nv));
      best = std::max(best, c);
    }
  }
  return 1.0 / (1.0 + std::exp(-(best - 0.5)));
}

/// Each entry names a violated scoring property; empty means all hold.
inline std::vector<std::string> scoring_property_failures(int instances, std::uint64_t seed) {
  std::vector<std::string> fails;
  auto fail = [&](const std::string& what) {
    if (std::find(fails.begin(), fails.end(), what) == fails.end()) fails.push_back(what);
  };
  const double s_half = 1.0 / (1.0 + std::exp(-0.5));
  const double s_mhalf = 1.0 / (1.0 + std::exp(0.5));

  Matrix a(3, 1), b(3, 1);
  a << 1, 2, 3;
  b << 2, 4, 6;
  if (std::abs(score_embeddings(a, {0}, a, {0}).value - s_half) > 1e-12) fail("identical embeddings score sigma(0.5)");
  if (std::abs(score_embeddings(a, {0}, b, {0}).value - s_half) > 1e-12) fail("parallel embeddings score sigma(0.5)");
  Matrix o(3, 1);
  o << 3, 0, -1;
  if (std::abs(score_embeddings(a, {0}, o, {0}).value - s_mhalf) > 1e-12) fail("orthogonal embeddings score sigma(-0.5)");
  if (!score_embeddings(a, {}, a, {0}).flagged) fail("empty predicate set is flagged");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int it = 0; it < instances; ++it) {
    const int d = 1 + int(rng() % 6);
    const int nh = 1 + int(rng() % 5), ns = 1 + int(rng() % 7);
    Matrix h(d, nh), s(d, ns);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = normal(rng);
    if (rng() % 10 == 0) s.col(Eigen::Index(rng() % std::uint64_t(ns))).setZero();
    std::vector<int> hp, sp;
    for (int u = 0; u < nh; ++u) {
      if (rng() % 3 != 0 || hp.empty()) hp.push_back(u);
    }
    for (int v = 0; v < ns; ++v) {
      if (rng() % 3 != 0) sp.push_back(v);
    }
    const auto got = score_embeddings(h, hp, s, sp);
    const double want = brute_force_score(h, hp, s, sp);
    if (std::abs(got.value - want) > 1e-12) fail("matches brute-force maximum");
    if (!(got.value > 0.0 && got.value < 1.0)) fail("value lies in (0, 1)");
    if (sp.empty()) continue;
    if (!(got.value >= 1.0 / (1.0 + std::exp(1.5)) - 1e-15 && got.value <= s_half + 1e-15)) {
      fail("value lies in [sigma(-1.5), sigma(0.5)]");
    }
    // Positive rescaling of any column leaves the score unchanged.
    Matrix h2 = h, s2 = s;
    for (Eigen::Index c = 0; c < h2.cols(); ++c) h2.col(c) *= std::exp(normal(rng));
    for (Eigen::Index c = 0; c < s2.cols(); ++c) s2.col(c) *= std::exp(normal(rng));
    if (std::abs(score_embeddings(h2, hp, s2, sp).value - got.value) > 1e-12) fail("invariant to positive scaling");
    // Order of the predicate lists is irrelevant.
    auto hp2 = hp, sp2 = sp;
    std::shuffle(hp2.begin(), hp2.end(), rng);
    std::shuffle(sp2.begin(), sp2.end(), rng);
    if (std::abs(score_embeddings(h, hp2, s, sp2).value - got.value) > 1e-12) fail("invariant to predicate order");
    // Adding a support predicate never lowers the score.
    Matrix s3(d, ns + 1);
    s3 << s, Matrix::NullaryExpr(d, 1, [&]() { return normal(rng); });
    auto sp3 = sp;
    sp3.push_back(ns);
    if (score_embeddings(h, hp, s3, sp3).value < got.value) fail("monotone in the support predicate set");
    // A pair below the current maximum changes nothing.
    if (got.best_cosine > -1.0 + 1e-9 && got.best_cosine != 0.0) {
      Matrix s4(d, ns + 1);
      s4 << s, Matrix::Zero(d, 1);
      // Mix towards the negated best partner until every cosine is below the max.
      Vector cand = -h.col(got.hypothesis_node);
      bool below = true;
      for (int u : hp) {
        const double nu = h.col(u).norm(), nc = cand.norm();
        if (nu > 0 && nc > 0 && h.col(u).dot(cand) / (nu * nc) >= got.best_cosine) below = false;
      }
      if (below) {
        s4.col(ns) = cand;
        const auto with = score_embeddings(h, hp, s4, sp3);
        if (with.value != got.value || with.support_node != got.support_node) fail("a pair below the max changes nothing");
      }
    }
    // The reported argmax pair attains the best cosine.
    const double nu = h.col(got.hypothesis_node).norm(), nv = s.col(got.support_node).norm();
    const double c = (nu == 0 || nv == 0) ? 0.0 : h.col(got.hypothesis_node).dot(s.col(got.support_node)) / (nu * nv);
    if (c != got.best_cosine) fail("argmax pair attains the maximum");
  }
  return fails;
}

}  // namespace modelcheck
