#include "sciqa/embed.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "sciqa/common.hpp"

namespace sciqa {

using nlohmann::json;

std::string to_string(Neighborhood n) {
  switch (n) {
    case Neighborhood::incoming: return "incoming";
    case Neighborhood::outgoing: return "outgoing";
    case Neighborhood::both: return "both";
  }
  return "?";
}

Neighborhood parse_neighborhood(const std::string& name) {
  if (name == "incoming") return Neighborhood::incoming;
  if (name == "outgoing") return Neighborhood::outgoing;
  if (name == "both") return Neighborhood::both;
  throw Error("unknown neighborhood '" + name + "'");
}

void ModelConfig::validate() const {
  if (word_dim < 1 || encoder_dim < 1 || edge_dim < 1 || node_dim < 1 || hidden_dim < 1) {
    throw Error("model dimensions must be positive");
  }
  if (steps < 1) throw Error("propagation step count must be at least 1");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) throw Error("init scale must be positive");
}

// ---------------------------------------------------------------------------
// Vocabulary

int Vocabulary::add(const std::string& word) {
  if (word == kUnknown) return 0;
  auto [it, inserted] = index_.try_emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

int Vocabulary::lookup(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

namespace {

std::vector<std::string> node_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : split(text, ' ')) {
    if (!w.empty()) out.push_back(std::move(w));
  }
  if (out.empty()) out.emplace_back(Vocabulary::kUnknown);
  return out;
}

}  // namespace

Vocabulary Vocabulary::from_graphs(const std::vector<const KnowledgeGraph*>& graphs) {
  Vocabulary vocab;
  for (const auto* g : graphs) {
    for (const auto& n : g->nodes()) {
      for (const auto& w : node_words(n.text)) vocab.add(w);
    }
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Parameters

const std::array<const char*, ParamTensors::kNumTensors>& ParamTensors::names() {
  static const std::array<const char*, kNumTensors> kNames = {
      "word_embedding", "lstm_input", "lstm_recurrent", "lstm_bias", "edge_embedding",
      "update_w1",      "update_b1",  "update_w2",      "update_b2"};
  return kNames;
}

ParamTensors ParamTensors::zeros_like() const {
  ParamTensors out = *this;
  out.for_each([](const char*, Matrix& m) { m.setZero(); });
  return out;
}

ParamTensors& ParamTensors::operator+=(const ParamTensors& other) {
  std::array<const Matrix*, kNumTensors> src{};
  std::size_t k = 0;
  other.for_each([&](const char*, const Matrix& m) { src[k++] = &m; });
  k = 0;
  for_each([&](const char*, Matrix& m) { m += *src[k++]; });
  return *this;
}

ParamTensors& ParamTensors::operator*=(double s) {
  for_each([&](const char*, Matrix& m) { m *= s; });
  return *this;
}

bool ParamTensors::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

std::size_t ParamTensors::num_values() const {
  std::size_t n = 0;
  for_each([&](const char*, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

ModelParams ModelParams::init(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.vocab = std::move(vocab);
  p.seed = seed;
  const auto v = static_cast<Eigen::Index>(p.vocab.size());
  auto& t = p.tensors;
  t.word_embedding.resize(config.word_dim, v);
  t.lstm_input.resize(4 * config.encoder_dim, config.word_dim);
  t.lstm_recurrent.resize(4 * config.encoder_dim, config.encoder_dim);
  t.lstm_bias.resize(4 * config.encoder_dim, 1);
  t.edge_embedding.resize(config.edge_dim, kNumEdgeLabels);
  t.update_w1.resize(config.hidden_dim, config.update_input_dim());
  t.update_b1.resize(config.hidden_dim, 1);
  t.update_w2.resize(config.node_dim, config.hidden_dim);
  t.update_b2.resize(config.node_dim, 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-config.init_scale, config.init_scale);
  t.for_each([&](const char*, Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    }
  });
  return p;
}

namespace {

void append_le(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::string tensor_bytes(const ParamTensors& t) {
  std::string out;
  out.reserve(t.num_values() * 8);
  t.for_each([&](const char*, const Matrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) append_le(out, m.data()[k]);
  });
  return out;
}

json config_to_json(const ModelConfig& c) {
  return {{"word_dim", c.word_dim},     {"encoder_dim", c.encoder_dim}, {"edge_dim", c.edge_dim},
          {"node_dim", c.node_dim},     {"hidden_dim", c.hidden_dim},   {"steps", c.steps},
          {"neighborhood", to_string(c.neighborhood)}, {"init_scale", c.init_scale}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.word_dim = j.at("word_dim").get<int>();
  c.encoder_dim = j.at("encoder_dim").get<int>();
  c.edge_dim = j.at("edge_dim").get<int>();
  c.node_dim = j.at("node_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.steps = j.at("steps").get<int>();
  c.neighborhood = parse_neighborhood(j.at("neighborhood").get<std::string>());
  c.init_scale = j.at("init_scale").get<double>();
  c.validate();
  return c;
}

constexpr char kModelMagic[] = "SCIQAMDL";
constexpr int kModelVersion = 1;

}  // namespace

std::string ModelParams::checksum() const { return sha256_hex(tensor_bytes(tensors)); }

void save_model(const std::string& path, const ModelParams& params) {
  json header;
  header["format"] = "sciqa-model";
  header["version"] = kModelVersion;
  header["config"] = config_to_json(params.config);
  header["vocab"] = params.vocab.words();
  header["seed"] = params.seed;
  json shapes = json::array();
  params.tensors.for_each([&](const char* name, const Matrix& m) {
    shapes.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["tensors"] = shapes;
  const auto body = tensor_bytes(params.tensors);
  header["checksum"] = sha256_hex(body);
  const auto head = header.dump();
  std::string out(kModelMagic, 8);
  const auto len = static_cast<std::uint32_t>(head.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  out += head;
  out += body;
  write_file(path, out);
}

ModelParams load_model(const std::string& path) {
  const auto data = read_file(path);
  if (data.size() < 12 || data.compare(0, 8, kModelMagic, 8) != 0) throw Error(path + " is not a model file");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[8 + i])) << (8 * i);
  if (12 + static_cast<std::size_t>(len) > data.size()) throw Error(path + ": truncated model header");
  const auto header = json::parse(data.substr(12, len));
  if (header.at("version").get<int>() != kModelVersion) throw Error(path + ": unsupported model version");

  ModelParams p;
  p.config = config_from_json(header.at("config"));
  p.seed = header.at("seed").get<std::uint64_t>();
  const auto words = header.at("vocab").get<std::vector<std::string>>();
  if (words.empty() || words.front() != Vocabulary::kUnknown) throw Error(path + ": vocabulary must start with <unk>");
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (p.vocab.add(words[i]) != static_cast<int>(i)) throw Error(path + ": duplicate vocabulary entry");
  }

  std::size_t pos = 12 + len;
  const auto& shapes = header.at("tensors");
  if (shapes.size() != ParamTensors::kNumTensors) throw Error(path + ": wrong tensor count");
  std::size_t k = 0;
  p.tensors.for_each([&](const char* name, Matrix& m) {
    const auto& s = shapes.at(k++);
    if (s.at("name").get<std::string>() != name) throw Error(path + ": unexpected tensor " + s.at("name").dump());
    m.resize(s.at("rows").get<Eigen::Index>(), s.at("cols").get<Eigen::Index>());
    const auto bytes = static_cast<std::size_t>(m.size()) * 8;
    if (pos + bytes > data.size()) throw Error(path + ": truncated tensor data");
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i) * 8 + b])) << (8 * b);
      }
      m.data()[i] = std::bit_cast<double>(bits);
    }
    pos += bytes;
  });
  if (pos != data.size()) throw Error(path + ": trailing bytes after tensors");
  if (p.checksum() != header.at("checksum").get<std::string>()) throw Error(path + ": parameter checksum mismatch");

  const auto& c = p.config;
  const auto& t = p.tensors;
  if (t.word_embedding.rows() != c.word_dim || t.word_embedding.cols() != static_cast<Eigen::Index>(p.vocab.size()) ||
      t.lstm_input.rows() != 4 * c.encoder_dim || t.update_w1.cols() != c.update_input_dim() ||
      t.update_w2.rows() != c.node_dim || t.edge_embedding.cols() != kNumEdgeLabels) {
    throw Error(path + ": tensor shapes do not match the recorded dimensions");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward and backward passes

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

Vector sigmoid(const Vector& v) { return v.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }); }
Vector tanh_v(const Vector& v) { return v.array().tanh().matrix(); }

struct LstmTrace {
  std::vector<int> ids;
  std::vector<Vector> i, f, o, g, c, h;  // per step; c/h hold the state after the step
};

LstmTrace run_lstm(std::string_view text, const ModelParams& params) {
  const auto& t = params.tensors;
  const int d = params.config.encoder_dim;
  LstmTrace tr;
  for (const auto& w : node_words(text)) tr.ids.push_back(params.vocab.lookup(w));
  Vector h = Vector::Zero(d), c = Vector::Zero(d);
  for (int id : tr.ids) {
    Vector z = t.lstm_input * t.word_embedding.col(id) + t.lstm_recurrent * h + t.lstm_bias.col(0);
    Vector ig = sigmoid(Vector(z.segment(0, d)));
    Vector fg = sigmoid(Vector(z.segment(d, d)));
    Vector og = sigmoid(Vector(z.segment(2 * d, d)));
    Vector gg = tanh_v(z.segment(3 * d, d));
    c = fg.cwiseProduct(c) + ig.cwiseProduct(gg);
    h = og.cwiseProduct(tanh_v(c));
    tr.i.push_back(ig);
    tr.f.push_back(fg);
    tr.o.push_back(og);
    tr.g.push_back(gg);
    tr.c.push_back(c);
    tr.h.push_back(h);
  }
  return tr;
}

void backward_lstm(const LstmTrace& tr, const Vector& grad_out, const ModelParams& params, ParamTensors& grad) {
  const auto& t = params.tensors;
  const int d = params.config.encoder_dim;
  Vector dh = grad_out;
  Vector dc = Vector::Zero(d);
  for (std::size_t s = tr.ids.size(); s-- > 0;) {
    const Vector tc = tanh_v(tr.c[s]);
    const Vector c_prev = s > 0 ? tr.c[s - 1] : Vector(Vector::Zero(d));
    const Vector h_prev = s > 0 ? tr.h[s - 1] : Vector(Vector::Zero(d));
    const Vector d_o = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(tr.o[s]).cwiseProduct((1.0 - tc.array().square()).matrix());
    const Vector d_i = dc.cwiseProduct(tr.g[s]);
    const Vector d_g = dc.cwiseProduct(tr.i[s]);
    const Vector d_f = dc.cwiseProduct(c_prev);
    Vector dz(4 * d);
    dz.segment(0, d) = d_i.array() * tr.i[s].array() * (1.0 - tr.i[s].array());
    dz.segment(d, d) = d_f.array() * tr.f[s].array() * (1.0 - tr.f[s].array());
    dz.segment(2 * d, d) = d_o.array() * tr.o[s].array() * (1.0 - tr.o[s].array());
    dz.segment(3 * d, d) = d_g.array() * (1.0 - tr.g[s].array().square());
    const int id = tr.ids[s];
    grad.lstm_input.noalias() += dz * t.word_embedding.col(id).transpose();
    grad.lstm_recurrent.noalias() += dz * h_prev.transpose();
    grad.lstm_bias.col(0) += dz;
    grad.word_embedding.col(id).noalias() += t.lstm_input.transpose() * dz;
    dh = t.lstm_recurrent.transpose() * dz;
    dc = dc.cwiseProduct(tr.f[s]);
  }
}

/// Message routing for one graph: counts[u, v] = number of messages u sends
/// to v, plus per-receiver label counts and incoming-bit sums.
struct Routing {
  Matrix counts;         // n x n
  Matrix label_counts;   // 4 x n
  Eigen::RowVectorXd incoming;  // 1 x n
};

Routing route(const KnowledgeGraph& g, Neighborhood hood) {
  const auto n = static_cast<Eigen::Index>(g.nodes().size());
  Routing r{Matrix::Zero(n, n), Matrix::Zero(kNumEdgeLabels, n), Eigen::RowVectorXd::Zero(n)};
  for (const auto& e : g.edges()) {
    const auto l = static_cast<Eigen::Index>(e.label);
    if (hood != Neighborhood::outgoing) {  // receiver e.to hears from e.from over an incoming edge
      r.counts(e.from, e.to) += 1.0;
      r.label_counts(l, e.to) += 1.0;
      r.incoming(e.to) += 1.0;
    }
    if (hood != Neighborhood::incoming) {  // receiver e.from hears from e.to over an outgoing edge
      r.counts(e.to, e.from) += 1.0;
      r.label_counts(l, e.from) += 1.0;
    }
  }
  return r;
}

struct PropagationTrace {
  Routing routing;
  std::vector<Matrix> inputs;  // per step t = 1..T: update-network input
  std::vector<Matrix> hidden;  // tanh of the first layer
  std::vector<Matrix> states;  // mu^(0..T)
};

PropagationTrace run_propagation(const KnowledgeGraph& g, const Matrix& features, const ModelParams& params) {
  const auto& c = params.config;
  const auto& t = params.tensors;
  const auto n = static_cast<Eigen::Index>(g.nodes().size());
  PropagationTrace tr;
  tr.routing = route(g, c.neighborhood);
  tr.states.push_back(Matrix::Zero(c.node_dim, n));
  for (int step = 1; step <= c.steps; ++step) {
    const Matrix& prev = tr.states.back();
    Matrix in(c.update_input_dim(), n);
    in.topRows(c.encoder_dim) = features;
    in.middleRows(c.encoder_dim, c.node_dim) = prev;
    in.middleRows(c.encoder_dim + c.node_dim, c.node_dim) = prev * tr.routing.counts;
    in.middleRows(c.encoder_dim + 2 * c.node_dim, c.edge_dim) = t.edge_embedding * tr.routing.label_counts;
    in.bottomRows(1) = tr.routing.incoming;
    Matrix hid = ((t.update_w1 * in).colwise() + t.update_b1.col(0)).array().tanh().matrix();
    Matrix mu = ((t.update_w2 * hid).colwise() + t.update_b2.col(0)).array().tanh().matrix();
    tr.inputs.push_back(std::move(in));
    tr.hidden.push_back(std::move(hid));
    tr.states.push_back(std::move(mu));
  }
  return tr;
}

/// Returns the gradient with respect to the node features.
Matrix backward_propagation(const PropagationTrace& tr, Matrix grad_states, const ModelParams& params,
                            ParamTensors& grad) {
  const auto& c = params.config;
  const auto& t = params.tensors;
  Matrix grad_features = Matrix::Zero(c.encoder_dim, grad_states.cols());
  for (int step = c.steps; step >= 1; --step) {
    const auto s = static_cast<std::size_t>(step);
    const Matrix& mu = tr.states[s];
    const Matrix& hid = tr.hidden[s - 1];
    const Matrix& in = tr.inputs[s - 1];
    Matrix gz2 = grad_states.array() * (1.0 - mu.array().square());
    grad.update_w2.noalias() += gz2 * hid.transpose();
    grad.update_b2.col(0) += gz2.rowwise().sum();
    Matrix gz1 = (t.update_w2.transpose() * gz2).array() * (1.0 - hid.array().square());
    grad.update_w1.noalias() += gz1 * in.transpose();
    grad.update_b1.col(0) += gz1.rowwise().sum();
    Matrix gin = t.update_w1.transpose() * gz1;
    grad_features += gin.topRows(c.encoder_dim);
    Matrix g_prev = gin.middleRows(c.encoder_dim, c.node_dim);
    g_prev.noalias() += gin.middleRows(c.encoder_dim + c.node_dim, c.node_dim) * tr.routing.counts.transpose();
    grad.edge_embedding.noalias() +=
        gin.middleRows(c.encoder_dim + 2 * c.node_dim, c.edge_dim) * tr.routing.label_counts.transpose();
    grad_states = std::move(g_prev);
  }
  return grad_features;
}

struct GraphTrace {
  std::vector<LstmTrace> lstm;
  Matrix features;
  PropagationTrace prop;
};

GraphTrace run_graph(const KnowledgeGraph& g, const ModelParams& params) {
  GraphTrace tr;
  const auto n = static_cast<Eigen::Index>(g.nodes().size());
  tr.features.resize(params.config.encoder_dim, n);
  for (const auto& node : g.nodes()) {
    tr.lstm.push_back(run_lstm(node.text, params));
    tr.features.col(node.id) = tr.lstm.back().h.back();
  }
  tr.prop = run_propagation(g, tr.features, params);
  return tr;
}

void backward_graph(const GraphTrace& tr, const Matrix& grad_states, const ModelParams& params, ParamTensors& grad) {
  Matrix gf = backward_propagation(tr.prop, grad_states, params, grad);
  for (std::size_t v = 0; v < tr.lstm.size(); ++v) {
    const auto col = static_cast<Eigen::Index>(v);
    if (gf.col(col).isZero(0.0)) continue;
    backward_lstm(tr.lstm[v], gf.col(col), params, grad);
  }
}

}  // namespace

Vector encode_text(std::string_view text, const ModelParams& params) { return run_lstm(text, params).h.back(); }

Matrix propagate_features(const KnowledgeGraph& graph, const Matrix& features, const ModelParams& params) {
  return run_propagation(graph, features, params).states.back();
}

Matrix propagate(const KnowledgeGraph& graph, const ModelParams& params) {
  return run_graph(graph, params).prop.states.back();
}

PairScore score_embeddings(const Matrix& hyp, const std::vector<int>& hyp_predicates, const Matrix& supp,
                           const std::vector<int>& supp_predicates) {
  PairScore s;
  if (hyp_predicates.empty() || supp_predicates.empty()) {
    s.flagged = true;
    s.best_cosine = -1.0;
    s.value = sigmoid(-1.5);
    return s;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (int u : hyp_predicates) {
    const double nu = hyp.col(u).norm();
    for (int v : supp_predicates) {
      const double nv = supp.col(v).norm();
      const double cosine = (nu == 0.0 || nv == 0.0) ? 0.0 : hyp.col(u).dot(supp.col(v)) / (nu * nv);
      // The first pair is always taken so a NaN cosine still selects a pair.
      if (cosine > best || s.hypothesis_node < 0) {
        best = cosine;
        s.hypothesis_node = u;
        s.support_node = v;
      }
    }
  }
  s.best_cosine = best;
  s.value = sigmoid(best - 0.5);
  return s;
}

PairScore score_pair(const GraphPair& pair, const ModelParams& params) {
  const auto hp = pair.hypothesis_graph.predicate_nodes();
  const auto sp = pair.support_graph.predicate_nodes();
  if (hp.empty() || sp.empty()) return score_embeddings(Matrix(), hp, Matrix(), sp);
  return score_embeddings(propagate(pair.hypothesis_graph, params), hp, propagate(pair.support_graph, params), sp);
}

double loss(const PairScore& score, int label) {
  if (label != 0 && label != 1) throw Error("label must be 0 or 1");
  return label == 1 ? -std::log(score.value) : -std::log(1.0 - score.value);
}

double accumulate_gradient(const TrainingExample& example, const ModelParams& params, ParamTensors& grad,
                           PairScore* score_out) {
  const auto& pair = example.pair;
  const auto hp = pair.hypothesis_graph.predicate_nodes();
  const auto sp = pair.support_graph.predicate_nodes();
  if (hp.empty() || sp.empty()) {
    const auto s = score_embeddings(Matrix(), hp, Matrix(), sp);
    if (score_out) *score_out = s;
    return loss(s, example.label);
  }
  const auto htr = run_graph(pair.hypothesis_graph, params);
  const auto str = run_graph(pair.support_graph, params);
  const Matrix& hmu = htr.prop.states.back();
  const Matrix& smu = str.prop.states.back();
  const auto s = score_embeddings(hmu, hp, smu, sp);
  if (score_out) *score_out = s;
  const double value = loss(s, example.label);

  const Vector a = hmu.col(s.hypothesis_node);
  const Vector b = smu.col(s.support_node);
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return value;
  // d loss / d (cos - 0.5) for sigmoid + cross-entropy.
  const double dscore = s.value - example.label;
  const double cosine = s.best_cosine;
  Matrix gh = Matrix::Zero(hmu.rows(), hmu.cols());
  Matrix gs = Matrix::Zero(smu.rows(), smu.cols());
  gh.col(s.hypothesis_node) = dscore * (b / (na * nb) - cosine * a / (na * na));
  gs.col(s.support_node) = dscore * (a / (na * nb) - cosine * b / (nb * nb));
  backward_graph(htr, gh, params, grad);
  backward_graph(str, gs, params, grad);
  return value;
}

LossAndGradient loss_and_gradient(const TrainingExample& example, const ModelParams& params) {
  LossAndGradient out;
  out.gradient = params.tensors.zeros_like();
  out.loss = accumulate_gradient(example, params, out.gradient, &out.score);
  return out;
}

std::vector<std::string> argmax_labels(const std::vector<std::pair<std::string, double>>& scores) {
  std::vector<std::string> out;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [label, value] : scores) {
    if (value > best) {
      best = value;
      out.clear();
    }
    if (value == best) out.push_back(label);
  }
  return out;
}

}  // namespace sciqa
