#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sciqa/embed.hpp"
#include "sciqa/hypothesis.hpp"
#include "sciqa/kg.hpp"
#include "sciqa/qa_data.hpp"
#include "sciqa/retrieval.hpp"
#include "sciqa/train.hpp"
#include "sciqa/triples.hpp"

namespace sciqa {

/// Error raised inside a pipeline stage; the CLI prints the stage tag.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class ExtractorMode { builtin, ingest };

/// Declarative run configuration. Relative paths resolve against the
/// directory of the config file.
struct PipelineConfig {
  std::map<std::string, std::string> datasets;  // split name -> question file
  std::string corpus;
  std::string index_dir;
  std::string model;
  std::string triple_cache;  // empty: no on-disk cache
  std::string triples;       // interchange file for ingest mode
  std::string phrase_table;  // empty: built-in table
  std::string output_dir;    // predictions and reports
  ExtractorMode extractor = ExtractorMode::builtin;
  RetrievalConfig retrieval;
  ModelConfig model_config;
  TrainConfig training;
  std::uint64_t seed = 13;
  int threads = 1;

  /// `overrides` are "dotted.key=value" strings applied to the JSON before
  /// it is read; values parse as JSON when possible and as strings otherwise.
  static PipelineConfig load(const std::string& path, const std::vector<std::string>& overrides = {});
  static PipelineConfig from_json(nlohmann::json j, const std::string& base_dir,
                                  const std::vector<std::string>& overrides = {});
  /// Fully resolved form (absolute paths, every default spelled out).
  nlohmann::json to_json() const;

  const std::string& dataset(const std::string& split) const;
  void validate() const;
};

void apply_override(nlohmann::json& j, const std::string& assignment);

/// Extraction results on disk, keyed by (sentence SHA-256, extractor version).
/// Thread-safe; `save` writes entries in key order.
class TripleCache {
 public:
  explicit TripleCache(std::string path);

  std::optional<std::vector<Triple>> get(const std::string& sentence_sha, const std::string& version) const;
  void put(const std::string& sentence_sha, const std::string& version, std::vector<Triple> triples);
  void save() const;
  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::vector<Triple>> entries_;
  mutable std::size_t hits_ = 0, misses_ = 0;
  bool dirty_ = false;
};

/// Serves extractions from a cache, falling back to the wrapped extractor.
class CachingExtractor final : public TripleExtractor {
 public:
  CachingExtractor(std::shared_ptr<const TripleExtractor> inner, std::shared_ptr<TripleCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::vector<Triple> extract(std::string_view sentence, const std::string& sentence_id) const override;
  std::string version() const override { return inner_->version(); }

 private:
  std::shared_ptr<const TripleExtractor> inner_;
  std::shared_ptr<TripleCache> cache_;
};

struct OptionTrace {
  Hypothesis hypothesis;
  std::vector<SentenceHit> supports;
  GraphPair pair;
  std::optional<PairScore> score;
};

struct QuestionTrace {
  std::string question_id;
  std::string answer_key;
  std::vector<OptionTrace> options;
  Prediction prediction;
};

/// Hypothesis generation, retrieval and graph construction for one
/// configuration. Shareable across threads once built.
class Engine {
 public:
  Engine(const PipelineConfig& config, std::shared_ptr<const CorpusIndex> index);

  const TripleExtractor& extractor() const { return *extractor_; }
  const CorpusIndex& index() const { return *index_; }

  /// Graph pairs for every option, without scores.
  QuestionTrace build(const Question& question) const;
  /// Scores every option and fills in the prediction; all-flagged questions
  /// degrade to a full tie like any other exact tie.
  QuestionTrace predict(const Question& question, const ModelParams& params) const;

  /// Writes pending cache entries, if a cache is configured.
  void flush_cache() const;

 private:
  PipelineConfig config_;
  std::shared_ptr<const CorpusIndex> index_;
  HypothesisGenerator generator_;
  std::shared_ptr<TripleCache> cache_;
  std::shared_ptr<const TripleExtractor> extractor_;
};

/// Runs `fn(i)` for i in [0, n) on `threads` workers; rethrows the first
/// failure after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct StageTimer {
  std::map<std::string, double> seconds;
  template <typename Fn>
  auto time(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Guard {
      StageTimer* t;
      std::string stage;
      std::chrono::steady_clock::time_point start;
      ~Guard() { t->seconds[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
    } guard{this, stage, start};
    return fn();
  }
};

struct IndexOutcome {
  bool rebuilt = false;
  std::size_t sentences = 0;
  std::string corpus_checksum;
};

/// Builds the index unless the stored corpus checksum already matches.
IndexOutcome run_index(const PipelineConfig& config);

/// Writes triples for every line of `input` (default: the corpus) in the
/// interchange format; returns the number of triples.
std::size_t run_extract(const PipelineConfig& config, const std::string& input, const std::string& output);

struct TrainOutcome {
  ModelParams params;
  nlohmann::json report;
};
TrainOutcome run_train(const PipelineConfig& config, const std::string& split = "train");

struct PredictOutcome {
  std::vector<Prediction> predictions;  // sorted by question id
  std::optional<EvalResult> evaluation;
  nlohmann::json report;
};

/// Predicts every question of `split` with the saved model; evaluates when
/// `evaluate` is set.
PredictOutcome run_predict(const PipelineConfig& config, const std::string& split, bool evaluate);

/// Human-readable trace for one question; throws when the id is unknown.
std::string run_explain(const PipelineConfig& config, const std::string& split, const std::string& question_id);

/// Per-question JSON record used in run reports.
nlohmann::json question_record(const QuestionTrace& trace, const Question& question);

}  // namespace sciqa
