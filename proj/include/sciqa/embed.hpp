#pragma once

#include <Eigen/Dense>

#include <array>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sciqa/kg.hpp"

namespace sciqa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Which incident edges feed a node's aggregated message.
enum class Neighborhood { incoming, outgoing, both };

std::string to_string(Neighborhood n);
Neighborhood parse_neighborhood(const std::string& name);

struct ModelConfig {
  int word_dim = 50;      // word embeddings
  int encoder_dim = 64;   // node text feature from the LSTM
  int edge_dim = 8;       // edge-label embeddings
  int node_dim = 64;      // node embeddings
  int hidden_dim = 64;    // first layer of the update network
  int steps = 2;          // propagation rounds, >= 1
  Neighborhood neighborhood = Neighborhood::both;
  double init_scale = 0.1;

  /// Width of the update network's input: [x_v ; mu_v ; sum of messages],
  /// where each message is [mu_u ; edge label embedding ; incoming bit].
  int update_input_dim() const { return encoder_dim + node_dim + node_dim + edge_dim + 1; }
  void validate() const;
};

/// Word list with a shared unknown entry at index 0.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  Vocabulary() { words_.emplace_back(kUnknown); }

  int add(const std::string& word);
  int lookup(const std::string& word) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  /// All words of all node texts, in first-seen order.
  static Vocabulary from_graphs(const std::vector<const KnowledgeGraph*>& graphs);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Every trainable tensor, stored as a dense matrix (vectors are n x 1).
/// The word table has one column per vocabulary entry.
struct ParamTensors {
  Matrix word_embedding;  // word_dim x vocab
  Matrix lstm_input;      // 4*encoder_dim x word_dim   (gates: i, f, o, g)
  Matrix lstm_recurrent;  // 4*encoder_dim x encoder_dim
  Matrix lstm_bias;       // 4*encoder_dim x 1
  Matrix edge_embedding;  // edge_dim x 4
  Matrix update_w1;       // hidden_dim x update_input_dim
  Matrix update_b1;       // hidden_dim x 1
  Matrix update_w2;       // node_dim x hidden_dim
  Matrix update_b2;       // node_dim x 1

  static constexpr int kNumTensors = 9;
  static const std::array<const char*, kNumTensors>& names();

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn(names()[0], self.word_embedding);
    fn(names()[1], self.lstm_input);
    fn(names()[2], self.lstm_recurrent);
    fn(names()[3], self.lstm_bias);
    fn(names()[4], self.edge_embedding);
    fn(names()[5], self.update_w1);
    fn(names()[6], self.update_b1);
    fn(names()[7], self.update_w2);
    fn(names()[8], self.update_b2);
  }
  template <typename Fn> void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn> void for_each(Fn&& fn) const { visit(*this, fn); }

  /// Same shapes, all zeros.
  ParamTensors zeros_like() const;
  ParamTensors& operator+=(const ParamTensors& other);
  ParamTensors& operator*=(double s);
  bool all_finite() const;
  std::size_t num_values() const;
};

struct ModelParams {
  ModelConfig config;
  Vocabulary vocab;
  ParamTensors tensors;
  std::uint64_t seed = 0;

  /// Uniform(-init_scale, init_scale) initialization.
  static ModelParams init(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed);

  /// SHA-256 over the little-endian bytes of every tensor, in visit order.
  std::string checksum() const;
};

/// Binary container: magic, JSON header (config, vocabulary, shapes, seed,
/// checksum), then raw float64 tensors. `load_model` verifies the checksum.
void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

/// Final LSTM hidden state over the node text's word embeddings.
Vector encode_text(std::string_view text, const ModelParams& params);

/// mu^(T) for every node, as columns of a node_dim x |V| matrix.
Matrix propagate(const KnowledgeGraph& graph, const ModelParams& params);
/// Same, from given node features (encoder_dim x |V|) instead of the encoder.
Matrix propagate_features(const KnowledgeGraph& graph, const Matrix& features, const ModelParams& params);

struct PairScore {
  double value = 0.0;
  double best_cosine = 0.0;
  int hypothesis_node = -1;  // argmax predicate pair
  int support_node = -1;
  bool flagged = false;      // a predicate set was empty
};

double sigmoid(double x);

/// sigma(max cos(mu_u, mu_v) - 0.5) over hypothesis x support predicate
/// nodes. A zero-norm embedding has cosine 0 with every partner; ties go to
/// the lowest (u, v). An empty predicate set yields the flagged value
/// sigma(-1.5).
PairScore score_embeddings(const Matrix& hyp_embeddings, const std::vector<int>& hyp_predicates,
                           const Matrix& supp_embeddings, const std::vector<int>& supp_predicates);
PairScore score_pair(const GraphPair& pair, const ModelParams& params);

/// Binary cross-entropy of a score against a 0/1 label.
double loss(const PairScore& score, int label);

struct TrainingExample {
  GraphPair pair;
  int label = 0;
};

/// Loss and exact reverse-mode gradient for one example. Only the argmax
/// predicate pair carries gradient through the max.
struct LossAndGradient {
  double loss = 0.0;
  PairScore score;
  ParamTensors gradient;
};
LossAndGradient loss_and_gradient(const TrainingExample& example, const ModelParams& params);
/// Adds the example's gradient into `grad` (same shapes as the params) and
/// returns its loss; `score` receives the forward result when non-null.
double accumulate_gradient(const TrainingExample& example, const ModelParams& params, ParamTensors& grad,
                           PairScore* score = nullptr);

/// Labels with the maximal score; exact ties return several labels.
std::vector<std::string> argmax_labels(const std::vector<std::pair<std::string, double>>& scores);

}  // namespace sciqa
