#include "sciqa/train.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace sciqa {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw Error("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw Error("Adam epsilon must be positive");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (epochs < 0) throw Error("epoch count must be non-negative");
  if (threads < 1) throw Error("thread count must be at least 1");
}

namespace {

void check_labels(const std::vector<TrainingExample>& examples) {
  bool pos = false, neg = false;
  for (const auto& e : examples) {
    if (e.label != 0 && e.label != 1) throw Error("training labels must be 0 or 1");
    (e.label == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error("training needs at least one positive and one negative example");
}

struct Adam {
  ParamTensors m, v;
  long step = 0;

  explicit Adam(const ParamTensors& like) : m(like.zeros_like()), v(like.zeros_like()) {}

  void apply(ParamTensors& params, const ParamTensors& grad, const TrainConfig& c) {
    ++step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
    std::array<Matrix*, ParamTensors::kNumTensors> ms{}, vs{};
    std::array<const Matrix*, ParamTensors::kNumTensors> gs{};
    std::size_t k = 0;
    m.for_each([&](const char*, Matrix& x) { ms[k++] = &x; });
    k = 0;
    v.for_each([&](const char*, Matrix& x) { vs[k++] = &x; });
    k = 0;
    grad.for_each([&](const char*, const Matrix& x) { gs[k++] = &x; });
    k = 0;
    params.for_each([&](const char*, Matrix& p) {
      Matrix& mk = *ms[k];
      Matrix& vk = *vs[k];
      const Matrix& g = *gs[k];
      ++k;
      mk = c.beta1 * mk + (1.0 - c.beta1) * g;
      vk = c.beta2 * vk + (1.0 - c.beta2) * g.cwiseProduct(g);
      p.array() -= c.learning_rate * (mk.array() / bc1) / ((vk.array() / bc2).sqrt() + c.epsilon);
    });
  }
};

}  // namespace

TrainResult train(const std::vector<TrainingExample>& examples, const ModelConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  check_labels(examples);
  std::vector<const KnowledgeGraph*> graphs;
  for (const auto& e : examples) {
    graphs.push_back(&e.pair.hypothesis_graph);
    graphs.push_back(&e.pair.support_graph);
  }
  auto params = ModelParams::init(model_config, Vocabulary::from_graphs(graphs), config.seed);
  return train_from(std::move(params), examples, config, on_epoch);
}

TrainResult train_from(ModelParams params, const std::vector<TrainingExample>& examples, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  config.validate();
  check_labels(examples);
  TrainResult result;
  Adam adam(params.tensors);
  std::mt19937_64 rng(config.seed ^ 0x5eed5eed5eedULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto workers = static_cast<std::size_t>(config.threads);
  std::vector<ParamTensors> partial(workers, params.tensors.zeros_like());
  std::vector<double> partial_loss(workers);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::size_t n = end - begin;
      const std::size_t used = std::min(workers, n);
      auto work = [&](std::size_t w) {
        auto& g = partial[w];
        g.for_each([](const char*, Matrix& m) { m.setZero(); });
        partial_loss[w] = 0.0;
        // Contiguous slices keep the per-worker summation order fixed.
        const std::size_t lo = begin + n * w / used, hi = begin + n * (w + 1) / used;
        for (std::size_t i = lo; i < hi; ++i) {
          partial_loss[w] += accumulate_gradient(examples[order[i]], params, g);
        }
      };
      if (used == 1) {
        work(0);
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < used; ++w) pool.emplace_back(work, w);
      }
      double batch_loss = 0.0;
      ParamTensors grad = std::move(partial[0]);
      batch_loss += partial_loss[0];
      for (std::size_t w = 1; w < used; ++w) {
        grad += partial[w];
        batch_loss += partial_loss[w];
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError(fmt::format("loss became non-finite in epoch {} at batch starting at example {} "
                                          "(batch loss {})",
                                          epoch, begin, batch_loss));
      }
      grad *= 1.0 / static_cast<double>(n);
      if (!grad.all_finite()) {
        throw DivergenceError(fmt::format("gradient became non-finite in epoch {} at batch starting at example {}",
                                          epoch, begin));
      }
      adam.apply(params.tensors, grad, config);
      if (!params.tensors.all_finite()) {
        throw DivergenceError(fmt::format("parameters became non-finite in epoch {} after batch at example {}", epoch,
                                          begin));
      }
      partial[0] = std::move(grad);
      epoch_loss += batch_loss;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = examples.empty() ? 0.0 : epoch_loss / static_cast<double>(examples.size());
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.curve.push_back(stats);
    if (on_epoch && !on_epoch(stats, params)) break;
  }
  result.params = std::move(params);
  return result;
}

std::string format_curve(const std::vector<EpochStats>& curve) {
  std::string out = "epoch\tmean_loss\tseconds\n";
  for (const auto& s : curve) out += fmt::format("{}\t{:.6f}\t{:.3f}\n", s.epoch, s.mean_loss, s.seconds);
  return out;
}

}  // namespace sciqa
