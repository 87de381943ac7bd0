#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sciqa/embed.hpp"
#include "sciqa/kg.hpp"
#include "sciqa/train.hpp"

namespace sciqa {

/// Planted-motif questions. Hypothesis graphs use words "he<i>" (entities)
/// and "hp<i>" (predicates); support graphs use a disjoint mirror vocabulary
/// "se<i>"/"sp<i>". The correct option's support contains the mirror of its
/// hypothesis triple; the other supports do not, though they may reuse the
/// mirrored predicate word with different arguments.
struct SyntheticConfig {
  int entity_words = 10;
  int predicate_words = 4;
  int options = 4;
  int support_triples = 3;            // per support graph, motif included
  double shared_predicate_rate = 0.5; // chance a wrong support reuses the mirrored predicate

  void validate() const;
};

struct SyntheticQuestion {
  std::string id;
  std::vector<GraphPair> options;  // labels "A", "B", ...
  int correct = 0;
};

std::vector<SyntheticQuestion> generate_synthetic(int count, std::uint64_t seed,
                                                  const SyntheticConfig& config = {});

/// One example per option, label 1 on the correct one.
std::vector<TrainingExample> to_examples(const std::vector<SyntheticQuestion>& questions);

/// Settings used for learnability runs: default dimensions, init scale 0.5,
/// step size 2e-3.
ModelConfig synthetic_model_config();
TrainConfig synthetic_train_config(int epochs, std::uint64_t seed);

/// Percentage score with 1/k credit for exact ties.
double synthetic_accuracy(const std::vector<SyntheticQuestion>& questions, const ModelParams& params);

}  // namespace sciqa
