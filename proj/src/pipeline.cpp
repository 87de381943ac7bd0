#include "sciqa/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <type_traits>

#include "sciqa/common.hpp"

namespace sciqa {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("override '" + assignment + "' is not key=value");
  const auto key = assignment.substr(0, eq);
  const auto raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &j;
  for (const auto& part : split(key, '.')) {
    if (part.empty()) throw Error("override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
  }
  *node = std::move(value);
}

namespace {

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_relative()) p = fs::path(base) / p;
  return p.lexically_normal().string();
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  const auto& v = j.at(key);
  if constexpr (std::is_unsigned_v<T>) {
    // get<unsigned>() would wrap a negative number around.
    if (!v.is_number_unsigned()) throw Error(std::string("config key '") + key + "' must be a non-negative integer");
  }
  out = v.get<T>();
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw Error("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
  auto base = fs::absolute(fs::path(path)).parent_path().string();
  return from_json(std::move(j), base, overrides);
}

PipelineConfig PipelineConfig::from_json(json j, const std::string& base_dir, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) apply_override(j, o);
  check_keys(j, "", {"datasets", "corpus", "index_dir", "model", "triple_cache", "triples", "phrase_table",
                     "output_dir", "extractor", "retrieval", "model_config", "training", "seed", "threads"});
  PipelineConfig c;
  const auto base = fs::absolute(base_dir).string();
  if (j.contains("datasets")) {
    for (const auto& [split_name, p] : j.at("datasets").items()) {
      parse_split(split_name);
      c.datasets[split_name] = resolve(base, p.get<std::string>());
    }
  }
  for (auto [key, field] : {std::pair{"corpus", &c.corpus}, {"index_dir", &c.index_dir}, {"model", &c.model},
                            {"triple_cache", &c.triple_cache}, {"triples", &c.triples},
                            {"phrase_table", &c.phrase_table}, {"output_dir", &c.output_dir}}) {
    read_opt(j, key, *field);
    *field = resolve(base, *field);
  }
  if (j.contains("extractor")) {
    const auto mode = j.at("extractor").get<std::string>();
    if (mode == "builtin") c.extractor = ExtractorMode::builtin;
    else if (mode == "ingest") c.extractor = ExtractorMode::ingest;
    else throw Error("extractor must be 'builtin' or 'ingest', got '" + mode + "'");
  }
  read_opt(j, "seed", c.seed);
  read_opt(j, "threads", c.threads);
  if (j.contains("retrieval")) {
    const auto& r = j.at("retrieval");
    check_keys(r, "retrieval", {"k", "overfetch_factor", "k1", "b", "max_tokens", "negation_words"});
    read_opt(r, "k", c.retrieval.k);
    read_opt(r, "overfetch_factor", c.retrieval.overfetch_factor);
    read_opt(r, "k1", c.retrieval.bm25.k1);
    read_opt(r, "b", c.retrieval.bm25.b);
    read_opt(r, "max_tokens", c.retrieval.filter.max_tokens);
    if (r.contains("negation_words")) {
      c.retrieval.filter.negation_words.clear();
      for (const auto& w : r.at("negation_words")) c.retrieval.filter.negation_words.insert(to_lower(w.get<std::string>()));
    }
  }
  if (j.contains("model_config")) {
    const auto& m = j.at("model_config");
    check_keys(m, "model_config",
               {"word_dim", "encoder_dim", "edge_dim", "node_dim", "hidden_dim", "steps", "neighborhood", "init_scale"});
    auto& mc = c.model_config;
    read_opt(m, "word_dim", mc.word_dim);
    read_opt(m, "encoder_dim", mc.encoder_dim);
    read_opt(m, "edge_dim", mc.edge_dim);
    read_opt(m, "node_dim", mc.node_dim);
    read_opt(m, "hidden_dim", mc.hidden_dim);
    read_opt(m, "steps", mc.steps);
    if (m.contains("neighborhood")) mc.neighborhood = parse_neighborhood(m.at("neighborhood").get<std::string>());
    read_opt(m, "init_scale", mc.init_scale);
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    check_keys(t, "training", {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "epochs", "threads"});
    read_opt(t, "learning_rate", c.training.learning_rate);
    read_opt(t, "beta1", c.training.beta1);
    read_opt(t, "beta2", c.training.beta2);
    read_opt(t, "epsilon", c.training.epsilon);
    read_opt(t, "batch_size", c.training.batch_size);
    read_opt(t, "epochs", c.training.epochs);
    read_opt(t, "threads", c.training.threads);
  }
  c.training.seed = c.seed;
  c.validate();
  return c;
}

json PipelineConfig::to_json() const {
  json j;
  j["datasets"] = datasets;
  j["corpus"] = corpus;
  j["index_dir"] = index_dir;
  j["model"] = model;
  j["triple_cache"] = triple_cache;
  j["triples"] = triples;
  j["phrase_table"] = phrase_table;
  j["output_dir"] = output_dir;
  j["extractor"] = extractor == ExtractorMode::builtin ? "builtin" : "ingest";
  j["seed"] = seed;
  j["threads"] = threads;
  j["retrieval"] = {{"k", retrieval.k},
                    {"overfetch_factor", retrieval.overfetch_factor},
                    {"k1", retrieval.bm25.k1},
                    {"b", retrieval.bm25.b},
                    {"max_tokens", retrieval.filter.max_tokens},
                    {"negation_words", retrieval.filter.negation_words}};
  const auto& m = model_config;
  j["model_config"] = {{"word_dim", m.word_dim},     {"encoder_dim", m.encoder_dim}, {"edge_dim", m.edge_dim},
                       {"node_dim", m.node_dim},     {"hidden_dim", m.hidden_dim},   {"steps", m.steps},
                       {"neighborhood", to_string(m.neighborhood)}, {"init_scale", m.init_scale}};
  const auto& t = training;
  j["training"] = {{"learning_rate", t.learning_rate}, {"beta1", t.beta1},   {"beta2", t.beta2},
                   {"epsilon", t.epsilon},             {"batch_size", t.batch_size}, {"epochs", t.epochs},
                   {"threads", t.threads}};
  return j;
}

const std::string& PipelineConfig::dataset(const std::string& split_name) const {
  parse_split(split_name);
  auto it = datasets.find(split_name);
  if (it == datasets.end() || it->second.empty()) throw Error("no dataset configured for split '" + split_name + "'");
  return it->second;
}

void PipelineConfig::validate() const {
  if (retrieval.k < 1) throw Error("retrieval.k must be at least 1");
  if (retrieval.overfetch_factor < 1) throw Error("retrieval.overfetch_factor must be at least 1");
  if (threads < 1) throw Error("threads must be at least 1");
  if (extractor == ExtractorMode::ingest && triples.empty()) throw Error("extractor 'ingest' needs a triples file");
  model_config.validate();
  training.validate();
}

// ---------------------------------------------------------------------------
// Triple cache

namespace {

json triple_to_json(const Triple& t) {
  json j{{"subject", t.subject}, {"predicate", t.predicate}, {"objects", t.objects}};
  if (t.time) j["time"] = *t.time;
  if (t.location) j["location"] = *t.location;
  return j;
}

Triple triple_from_json(const json& j) {
  Triple t;
  t.subject = j.at("subject").get<std::string>();
  t.predicate = j.at("predicate").get<std::string>();
  t.objects = j.at("objects").get<std::vector<std::string>>();
  if (j.contains("time")) t.time = j.at("time").get<std::string>();
  if (j.contains("location")) t.location = j.at("location").get<std::string>();
  return t;
}

}  // namespace

TripleCache::TripleCache(std::string path) : path_(std::move(path)) {
  if (path_.empty() || !fs::exists(path_)) return;
  std::istringstream in(read_file(path_));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      std::vector<Triple> triples;
      for (const auto& t : j.at("triples")) triples.push_back(triple_from_json(t));
      entries_[{j.at("sha256").get<std::string>(), j.at("extractor").get<std::string>()}] = std::move(triples);
    } catch (const json::exception& e) {
      throw ParseError(path_, lineno, e.what());
    }
  }
}

std::optional<std::vector<Triple>> TripleCache::get(const std::string& sha, const std::string& version) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({sha, version});
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void TripleCache::put(const std::string& sha, const std::string& version, std::vector<Triple> triples) {
  std::lock_guard lock(mu_);
  for (auto& t : triples) t.source_sentence_id.clear();
  entries_[{sha, version}] = std::move(triples);
  dirty_ = true;
}

void TripleCache::save() const {
  std::lock_guard lock(mu_);
  if (path_.empty() || !dirty_) return;
  std::string out;
  for (const auto& [key, triples] : entries_) {
    json j{{"sha256", key.first}, {"extractor", key.second}, {"triples", json::array()}};
    for (const auto& t : triples) j["triples"].push_back(triple_to_json(t));
    out += j.dump() + "\n";
  }
  if (auto parent = fs::path(path_).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_file(path_, out);
}

std::size_t TripleCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}
std::size_t TripleCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}
std::size_t TripleCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

std::vector<Triple> CachingExtractor::extract(std::string_view sentence, const std::string& sentence_id) const {
  const auto sha = sha256_hex(sentence);
  const auto version = inner_->version();
  if (auto cached = cache_->get(sha, version)) {
    for (auto& t : *cached) t.source_sentence_id = sentence_id;
    return *cached;
  }
  auto triples = inner_->extract(sentence, sentence_id);
  cache_->put(sha, version, triples);
  return triples;
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(const PipelineConfig& config, std::shared_ptr<const CorpusIndex> index)
    : config_(config),
      index_(std::move(index)),
      generator_(config.phrase_table.empty() ? PhraseTable::builtin() : PhraseTable::load(config.phrase_table)) {
  std::shared_ptr<const TripleExtractor> base = std::make_shared<RuleBasedExtractor>();
  if (config.extractor == ExtractorMode::ingest) {
    base = std::make_shared<IngestedExtractor>(ingest_triples(config.triples), base);
  }
  if (!config.triple_cache.empty()) {
    cache_ = std::make_shared<TripleCache>(config.triple_cache);
    extractor_ = std::make_shared<CachingExtractor>(base, cache_);
  } else {
    extractor_ = std::move(base);
  }
}

QuestionTrace Engine::build(const Question& question) const {
  QuestionTrace trace;
  trace.question_id = question.id();
  trace.answer_key = question.answer_key();
  for (const auto& opt : question.options()) {
    OptionTrace ot;
    ot.hypothesis = generator_.generate(question.stem(), opt.text, question.id(), opt.label);
    ot.supports = search_supports(*index_, ot.hypothesis, config_.retrieval);
    ot.pair = build_pair(ot.hypothesis, ot.supports, *extractor_);
    trace.options.push_back(std::move(ot));
  }
  return trace;
}

QuestionTrace Engine::predict(const Question& question, const ModelParams& params) const {
  auto trace = build(question);
  std::vector<std::pair<std::string, double>> scores;
  for (auto& ot : trace.options) {
    ot.score = score_pair(ot.pair, params);
    scores.emplace_back(ot.hypothesis.option_label, ot.score->value);
  }
  trace.prediction.question_id = question.id();
  for (auto& label : argmax_labels(scores)) trace.prediction.chosen_labels.insert(std::move(label));
  return trace;
}

void Engine::flush_cache() const {
  if (cache_) cache_->save();
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const auto i = next.fetch_add(1);
          if (i >= n || failed) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Stages

namespace {

template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::shared_ptr<const CorpusIndex> load_index(const PipelineConfig& config) {
  return in_stage("index", [&] {
    if (config.index_dir.empty()) throw Error("no index_dir configured");
    if (!fs::exists(fs::path(config.index_dir) / "manifest.json")) {
      throw Error("no index in " + config.index_dir + " (run the index command first)");
    }
    return std::make_shared<const CorpusIndex>(CorpusIndex::load(config.index_dir));
  });
}

Dataset load_split(const PipelineConfig& config, const std::string& split_name) {
  return in_stage("data", [&] { return load_dataset(config.dataset(split_name), parse_split(split_name)); });
}

std::string points_string(const Points& p) { return fmt::format("{}/{}", p.numerator(), p.denominator()); }

void ensure_output_dir(const PipelineConfig& config) {
  if (config.output_dir.empty()) throw Error("no output_dir configured");
  fs::create_directories(config.output_dir);
}

}  // namespace

IndexOutcome run_index(const PipelineConfig& config) {
  return in_stage("index", [&] {
    if (config.corpus.empty()) throw Error("no corpus configured");
    if (config.index_dir.empty()) throw Error("no index_dir configured");
    IndexOutcome out;
    out.corpus_checksum = sha256_file(config.corpus);
    if (CorpusIndex::stored_checksum(config.index_dir) == out.corpus_checksum) {
      // Unchanged corpus: verify the stored index and leave it alone.
      out.sentences = CorpusIndex::load(config.index_dir).size();
      return out;
    }
    const auto index = CorpusIndex::build(read_corpus_file(config.corpus));
    index.save(config.index_dir, out.corpus_checksum);
    out.rebuilt = true;
    out.sentences = index.size();
    return out;
  });
}

std::size_t run_extract(const PipelineConfig& config, const std::string& input, const std::string& output) {
  return in_stage("extract", [&] {
    const auto& source = input.empty() ? config.corpus : input;
    if (source.empty()) throw Error("no input sentences (pass an input file or configure a corpus)");
    const auto lines = read_corpus_file(source);
    Engine engine(config, std::make_shared<const CorpusIndex>());
    std::vector<std::vector<Triple>> results(lines.size());
    parallel_for(lines.size(), config.threads, [&](std::size_t i) {
      results[i] = engine.extractor().extract(lines[i].text, lines[i].id);
    });
    engine.flush_cache();
    std::string out;
    std::size_t count = 0;
    for (const auto& triples : results) {
      for (const auto& t : triples) {
        out += format_triple(t) + "\n";
        ++count;
      }
    }
    if (output.empty() || output == "-") {
      std::fwrite(out.data(), 1, out.size(), stdout);
    } else {
      write_file(output, out);
    }
    return count;
  });
}

json question_record(const QuestionTrace& trace, const Question& question) {
  json q{{"id", trace.question_id}, {"answer_key", question.answer_key()}, {"options", json::array()}};
  for (const auto& ot : trace.options) {
    json o{{"label", ot.hypothesis.option_label},
           {"hypothesis", ot.hypothesis.text},
           {"rule", to_string(ot.hypothesis.rule_applied)},
           {"supports", ot.supports.size()},
           {"hypothesis_graph", {{"nodes", ot.pair.hypothesis_graph.nodes().size()},
                                 {"edges", ot.pair.hypothesis_graph.edges().size()}}},
           {"support_graph", {{"nodes", ot.pair.support_graph.nodes().size()},
                              {"edges", ot.pair.support_graph.edges().size()}}},
           {"flagged", ot.pair.flagged}};
    if (ot.pair.flagged) o["flag_reason"] = ot.pair.flag_reason;
    if (ot.score) {
      o["score"] = ot.score->value;
      o["best_cosine"] = ot.score->best_cosine;
    }
    q["options"].push_back(std::move(o));
  }
  q["chosen"] = trace.prediction.chosen_labels;
  return q;
}

TrainOutcome run_train(const PipelineConfig& config, const std::string& split_name) {
  StageTimer timer;
  const auto dataset = timer.time("load", [&] { return load_split(config, split_name); });
  if (dataset.size() == 0) throw StageError("train", "training split '" + split_name + "' is empty");
  const auto index = timer.time("load", [&] { return load_index(config); });
  Engine engine(config, index);

  std::vector<QuestionTrace> traces(dataset.size());
  timer.time("graphs", [&] {
    in_stage("graphs", [&] {
      parallel_for(dataset.size(), config.threads, [&](std::size_t i) { traces[i] = engine.build(dataset.questions()[i]); });
      engine.flush_cache();
      return 0;
    });
    return 0;
  });

  std::vector<TrainingExample> examples;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& q = dataset.questions()[i];
    for (auto& ot : traces[i].options) {
      // Flagged pairs have a constant score and no gradient.
      if (ot.pair.flagged) {
        ++flagged;
        continue;
      }
      examples.push_back({std::move(ot.pair), ot.hypothesis.option_label == q.answer_key() ? 1 : 0});
    }
  }

  auto result = timer.time("train", [&] {
    return in_stage("train", [&] { return train(examples, config.model_config, config.training); });
  });
  in_stage("train", [&] {
    if (config.model.empty()) throw Error("no model path configured");
    if (auto parent = fs::path(config.model).parent_path(); !parent.empty()) fs::create_directories(parent);
    save_model(config.model, result.params);
    return 0;
  });

  json report;
  report["command"] = "train";
  report["split"] = split_name;
  report["config"] = config.to_json();
  report["questions"] = dataset.size();
  report["examples"] = examples.size();
  report["flagged_pairs_skipped"] = flagged;
  report["vocabulary"] = result.params.vocab.size();
  report["model_checksum"] = result.params.checksum();
  json curve = json::array();
  for (const auto& s : result.curve) curve.push_back({{"epoch", s.epoch}, {"mean_loss", s.mean_loss}});
  report["training_curve"] = curve;
  report["timings"] = timer.seconds;
  if (!config.output_dir.empty()) {
    ensure_output_dir(config);
    write_file((fs::path(config.output_dir) / "train_report.json").string(), report.dump(2) + "\n");
    write_file((fs::path(config.output_dir) / "training_curve.tsv").string(), format_curve(result.curve));
  }
  return {std::move(result.params), std::move(report)};
}

PredictOutcome run_predict(const PipelineConfig& config, const std::string& split_name, bool evaluate) {
  StageTimer timer;
  const auto dataset = timer.time("load", [&] { return load_split(config, split_name); });
  const auto index = timer.time("load", [&] { return load_index(config); });
  const auto params = timer.time("load", [&] {
    return in_stage("model", [&] {
      if (config.model.empty()) throw Error("no model path configured");
      return load_model(config.model);
    });
  });
  Engine engine(config, index);

  std::vector<QuestionTrace> traces(dataset.size());
  timer.time("predict", [&] {
    in_stage("predict", [&] {
      parallel_for(dataset.size(), config.threads,
                   [&](std::size_t i) { traces[i] = engine.predict(dataset.questions()[i], params); });
      engine.flush_cache();
      return 0;
    });
    return 0;
  });

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return dataset.questions()[a].id() < dataset.questions()[b].id(); });

  PredictOutcome out;
  json records = json::array();
  for (auto i : order) {
    out.predictions.push_back(traces[i].prediction);
    records.push_back(question_record(traces[i], dataset.questions()[i]));
  }
  if (evaluate) {
    out.evaluation = in_stage("evaluate", [&] { return score_predictions(dataset, out.predictions); });
    for (auto& r : records) r["points"] = points_string(out.evaluation->per_question_points.at(r["id"].get<std::string>()));
  }

  json& report = out.report;
  report["command"] = evaluate ? "evaluate" : "predict";
  report["split"] = split_name;
  report["config"] = config.to_json();
  report["model_checksum"] = params.checksum();
  report["questions"] = records;
  if (out.evaluation) {
    report["aggregate"] = {{"score", out.evaluation->total_score()},
                           {"formatted", out.evaluation->formatted()},
                           {"total_points", points_string(out.evaluation->total_points)},
                           {"num_questions", out.evaluation->num_questions}};
  }
  report["timings"] = timer.seconds;

  in_stage("output", [&] {
    ensure_output_dir(config);
    const auto dir = fs::path(config.output_dir);
    save_predictions((dir / (split_name + "_predictions.jsonl")).string(), out.predictions);
    write_file((dir / (split_name + (evaluate ? "_evaluate" : "_predict") + "_report.json")).string(),
               report.dump(2) + "\n");
    return 0;
  });
  return out;
}

std::string run_explain(const PipelineConfig& config, const std::string& split_name, const std::string& question_id) {
  const auto dataset = load_split(config, split_name);
  const auto* question = dataset.find(question_id);
  if (!question) throw StageError("explain", "unknown question id '" + question_id + "' in split " + split_name);
  const auto index = load_index(config);
  std::optional<ModelParams> params;
  if (!config.model.empty() && fs::exists(config.model)) {
    params = in_stage("model", [&] { return load_model(config.model); });
  }
  Engine engine(config, index);
  const auto trace = in_stage("explain", [&] {
    return params ? engine.predict(*question, *params) : engine.build(*question);
  });
  engine.flush_cache();

  std::string out = fmt::format("question {}\nstem: {}\nanswer: {}\n", question->id(), question->stem(),
                                question->answer_key());
  for (const auto& ot : trace.options) {
    const auto& pair = ot.pair;
    out += fmt::format("\n== option {}: {}\n", ot.hypothesis.option_label,
                       question->option(ot.hypothesis.option_label).text);
    out += fmt::format("hypothesis ({}): {}\n", to_string(ot.hypothesis.rule_applied), ot.hypothesis.text);
    out += fmt::format("supports: {}\n", ot.supports.size());
    for (const auto& hit : ot.supports) {
      out += fmt::format("  [{:.4f}] {}  {}\n", hit.relevance_score, hit.sentence_id, hit.text);
    }
    out += "hypothesis graph:\n" + dump_graph(pair.hypothesis_graph);
    out += "support graph:\n" + dump_graph(pair.support_graph);
    if (pair.flagged) out += "flagged: " + pair.flag_reason + "\n";
    if (ot.score) {
      out += fmt::format("score: {:.17g} (max cosine {:.17g})\n", ot.score->value, ot.score->best_cosine);
      if (ot.score->hypothesis_node >= 0) {
        out += fmt::format("argmax pair: hypothesis node {} \"{}\" ~ support node {} \"{}\"\n",
                           ot.score->hypothesis_node,
                           pair.hypothesis_graph.nodes()[static_cast<std::size_t>(ot.score->hypothesis_node)].text,
                           ot.score->support_node,
                           pair.support_graph.nodes()[static_cast<std::size_t>(ot.score->support_node)].text);
      }
    }
  }
  if (params) {
    std::string chosen;
    for (const auto& l : trace.prediction.chosen_labels) chosen += (chosen.empty() ? "" : ",") + l;
    out += fmt::format("\nchosen: {}\n", chosen);
  } else {
    out += "\n(no model file; scores omitted)\n";
  }
  return out;
}

}  // namespace sciqa
