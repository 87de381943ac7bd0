#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sciqa/common.hpp"
#include "sciqa/embed.hpp"

namespace sciqa {

/// Adam over mini-batch mean gradients.
struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 1;
  // Gradient workers per batch. Results are deterministic for a fixed count;
  // different counts sum in a different order.
  int threads = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> curve;
};

/// Raised when a loss or parameter becomes non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochStats&, const ModelParams&)>;

/// Requires at least one positive and one negative example. The vocabulary
/// covers every node word of every example.
TrainResult train(const std::vector<TrainingExample>& examples, const ModelConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Continues from existing parameters (vocabulary and shapes unchanged).
TrainResult train_from(ModelParams params, const std::vector<TrainingExample>& examples, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

/// "epoch\tmean_loss\tseconds" lines.
std::string format_curve(const std::vector<EpochStats>& curve);

}  // namespace sciqa
