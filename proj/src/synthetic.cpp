#include "sciqa/synthetic.hpp"

#include <fmt/format.h>

#include <random>
#include <set>
#include <tuple>

#include "sciqa/common.hpp"

namespace sciqa {

void SyntheticConfig::validate() const {
  if (entity_words < 2 || predicate_words < 1) throw Error("synthetic vocabulary too small");
  if (options < 2 || options > 26) throw Error("synthetic option count must be in [2, 26]");
  if (support_triples < 1) throw Error("synthetic supports need at least one triple");
  if (!(shared_predicate_rate >= 0.0 && shared_predicate_rate <= 1.0)) throw Error("shared predicate rate must be in [0, 1]");
  if (static_cast<long>(entity_words) * (entity_words - 1) * predicate_words < options) {
    throw Error("synthetic vocabulary too small for distinct options");
  }
}

namespace {

using Motif = std::tuple<int, int, int>;  // subject, predicate, object

Triple make_triple(const char* side, const Motif& m, const std::string& sid) {
  Triple t;
  t.subject = fmt::format("{}e{}", side, std::get<0>(m));
  t.predicate = fmt::format("{}p{}", side, std::get<1>(m));
  t.objects = {fmt::format("{}e{}", side, std::get<2>(m))};
  t.source_sentence_id = sid;
  return t;
}

}  // namespace

std::vector<SyntheticQuestion> generate_synthetic(int count, std::uint64_t seed, const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  auto random_motif = [&]() {
    const int s = uniform(config.entity_words);
    int o = uniform(config.entity_words - 1);
    if (o >= s) ++o;
    return Motif{s, uniform(config.predicate_words), o};
  };
  std::bernoulli_distribution shared(config.shared_predicate_rate);

  std::vector<SyntheticQuestion> out;
  for (int q = 0; q < count; ++q) {
    SyntheticQuestion sq;
    sq.id = fmt::format("syn{}", q);
    sq.correct = uniform(config.options);
    std::set<Motif> used;
    std::vector<Motif> motifs;
    while (static_cast<int>(motifs.size()) < config.options) {
      auto m = random_motif();
      if (used.insert(m).second) motifs.push_back(m);
    }
    for (int j = 0; j < config.options; ++j) {
      const auto label = std::string(1, static_cast<char>('A' + j));
      const auto& motif = motifs[static_cast<std::size_t>(j)];
      std::vector<Triple> support;
      int sentence = 0;
      auto sid = [&] { return fmt::format("{}/{}/s{}", sq.id, label, sentence++); };
      if (j == sq.correct) {
        support.push_back(make_triple("s", motif, sid()));
      } else if (shared(rng)) {
        Motif near = motif;
        do {
          near = random_motif();
          std::get<1>(near) = std::get<1>(motif);
        } while (near == motif);
        support.push_back(make_triple("s", near, sid()));
      }
      while (static_cast<int>(support.size()) < config.support_triples) {
        auto m = random_motif();
        if (m == motif) continue;
        support.push_back(make_triple("s", m, sid()));
      }
      // The motif's position among the support triples is randomized.
      std::shuffle(support.begin(), support.end(), rng);
      GraphPair pair;
      pair.question_id = sq.id;
      pair.option_label = label;
      pair.hypothesis_graph = build_graph({make_triple("h", motif, "hyp:" + sq.id + "/" + label)});
      pair.support_graph = build_graph(support);
      for (const auto& t : support) pair.support_ids.push_back(t.source_sentence_id);
      sq.options.push_back(std::move(pair));
    }
    out.push_back(std::move(sq));
  }
  return out;
}

std::vector<TrainingExample> to_examples(const std::vector<SyntheticQuestion>& questions) {
  std::vector<TrainingExample> out;
  for (const auto& q : questions) {
    for (std::size_t j = 0; j < q.options.size(); ++j) {
      out.push_back({q.options[j], static_cast<int>(j) == q.correct ? 1 : 0});
    }
  }
  return out;
}

ModelConfig synthetic_model_config() {
  ModelConfig mc;
  mc.init_scale = 0.5;
  return mc;
}

TrainConfig synthetic_train_config(int epochs, std::uint64_t seed) {
  TrainConfig tc;
  tc.learning_rate = 2e-3;
  tc.epochs = epochs;
  tc.seed = seed;
  return tc;
}

double synthetic_accuracy(const std::vector<SyntheticQuestion>& questions, const ModelParams& params) {
  if (questions.empty()) return 0.0;
  double points = 0.0;
  for (const auto& q : questions) {
    std::vector<std::pair<std::string, double>> scores;
    for (const auto& pair : q.options) scores.emplace_back(pair.option_label, score_pair(pair, params).value);
    const auto chosen = argmax_labels(scores);
    const auto& gold = q.options[static_cast<std::size_t>(q.correct)].option_label;
    if (std::find(chosen.begin(), chosen.end(), gold) != chosen.end()) points += 1.0 / static_cast<double>(chosen.size());
  }
  return 100.0 * points / static_cast<double>(questions.size());
}

}  // namespace sciqa
