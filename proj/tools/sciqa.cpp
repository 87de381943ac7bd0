// Command-line front end: index, extract, train, predict, evaluate, explain.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sciqa/pipeline.hpp"
#include "sciqa/qa_data.hpp"
#include "sciqa/synthetic.hpp"
#include "sciqa/train.hpp"

using namespace sciqa;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int threads = 0;
  long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("-c,--config", c.config, "pipeline config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--set", c.overrides, "override a config value, e.g. retrieval.k=10 (repeatable)");
  cmd->add_option("--threads", c.threads, "worker threads");
  cmd->add_option("--seed", c.seed, "random seed");
}

PipelineConfig resolve_config(const Common& c) {
  auto overrides = c.overrides;
  if (c.threads > 0) overrides.push_back(fmt::format("threads={}", c.threads));
  if (c.seed >= 0) overrides.push_back(fmt::format("seed={}", c.seed));
  try {
    return PipelineConfig::load(c.config, overrides);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
}

int train_synthetic(int questions, int held_out, int epochs, std::uint64_t seed, const std::string& model_path) {
  const auto mc = synthetic_model_config();
  const auto tc = synthetic_train_config(epochs, seed);
  const auto train_set = generate_synthetic(questions, seed);
  const auto test_set = generate_synthetic(held_out, seed + 1);
  const auto examples = to_examples(train_set);
  std::vector<const KnowledgeGraph*> graphs;
  for (const auto& e : examples) {
    graphs.push_back(&e.pair.hypothesis_graph);
    graphs.push_back(&e.pair.support_graph);
  }
  const auto untrained = ModelParams::init(mc, Vocabulary::from_graphs(graphs), seed);
  fmt::print("untrained held-out accuracy {:.2f}\n", synthetic_accuracy(test_set, untrained));
  fmt::print("epoch\tmean_loss\theld_out\n");
  auto result = train(examples, mc, tc, [&](const EpochStats& s, const ModelParams& p) {
    fmt::print("{}\t{:.6f}\t{:.2f}\n", s.epoch, s.mean_loss, synthetic_accuracy(test_set, p));
    std::fflush(stdout);
    return true;
  });
  if (!model_path.empty()) save_model(model_path, result.params);
  fmt::print("model checksum {}\n", result.params.checksum());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-choice science QA over retrieved knowledge graphs"};
  app.require_subcommand(1);

  Common c;

  auto* index = app.add_subcommand("index", "build the corpus index (no-op when the corpus is unchanged)");
  add_common(index, c);

  std::string extract_input, extract_output = "-";
  auto* extract = app.add_subcommand("extract", "extract triples from sentences into the interchange format");
  add_common(extract, c);
  extract->add_option("-i,--input", extract_input, "sentence file (default: the configured corpus)");
  extract->add_option("-o,--output", extract_output, "output file, '-' for stdout");

  std::string split = "train";
  bool synthetic = false;
  int syn_questions = 1000, syn_held_out = 400, syn_epochs = 50;
  std::string syn_model;
  auto* trn = app.add_subcommand("train", "train the graph-matching model");
  add_common(trn, c, false);
  trn->add_option("--split", split, "dataset split to train on");
  trn->add_flag("--synthetic", synthetic, "train on planted-motif synthetic questions instead");
  trn->add_option("--questions", syn_questions, "synthetic training questions");
  trn->add_option("--held-out", syn_held_out, "synthetic held-out questions");
  trn->add_option("--epochs", syn_epochs, "synthetic epochs");
  trn->add_option("--model-out", syn_model, "where to save the synthetic model");

  std::string pred_split = "test";
  auto* predict = app.add_subcommand("predict", "write predictions for a split");
  add_common(predict, c);
  predict->add_option("--split", pred_split, "dataset split");

  std::string eval_split = "test", dataset_path, predictions_path;
  bool guess = false;
  double upper = -1.0;
  int choices = 4;
  auto* evaluate = app.add_subcommand("evaluate", "score a split, a predictions file, or a baseline");
  add_common(evaluate, c, false);
  evaluate->add_option("--split", eval_split, "dataset split");
  evaluate->add_flag("--guess-all", guess, "score the strategy that ties every option");
  evaluate->add_option("--predictions", predictions_path, "rescore an existing predictions file");
  evaluate->add_option("--dataset", dataset_path, "question file (instead of the configured split)");
  evaluate->add_option("--upper-bound", upper, "solved fraction for the upper-bound calculator")
      ->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--choices", choices, "options per question for --upper-bound")->check(CLI::PositiveNumber);

  std::string explain_split = "test", question_id;
  auto* explain = app.add_subcommand("explain", "trace one question through every stage");
  add_common(explain, c);
  explain->add_option("--split", explain_split, "dataset split");
  explain->add_option("question_id", question_id, "question id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (index->parsed()) {
      const auto out = run_index(resolve_config(c));
      fmt::print("{} index: {} sentences, corpus sha256 {}\n", out.rebuilt ? "built" : "unchanged", out.sentences,
                 out.corpus_checksum);
    } else if (extract->parsed()) {
      const auto n = run_extract(resolve_config(c), extract_input, extract_output);
      fmt::print(stderr, "extracted {} triples\n", n);
    } else if (trn->parsed()) {
      if (synthetic) {
        return train_synthetic(syn_questions, syn_held_out, syn_epochs, c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : 1,
                               syn_model);
      }
      if (c.config.empty()) throw StageError("config", "--config is required unless --synthetic is given");
      const auto out = run_train(resolve_config(c), split);
      for (const auto& e : out.report["training_curve"]) {
        fmt::print("epoch {}\tloss {:.6f}\n", e["epoch"].get<int>(), e["mean_loss"].get<double>());
      }
      fmt::print("trained on {} examples; model checksum {}\n", out.report["examples"].get<std::size_t>(),
                 out.params.checksum());
    } else if (predict->parsed()) {
      const auto out = run_predict(resolve_config(c), pred_split, false);
      fmt::print("{} predictions written\n", out.predictions.size());
    } else if (evaluate->parsed()) {
      if (upper >= 0.0) {
        fmt::print("{}\n", format_score(upper_bound_score(upper, choices)));
        return 0;
      }
      if (guess || !predictions_path.empty()) {
        std::string path = dataset_path;
        if (path.empty()) {
          if (c.config.empty()) throw StageError("evaluate", "--dataset or --config is required");
          path = resolve_config(c).dataset(eval_split);
        }
        const auto dataset = load_dataset(path, parse_split(eval_split));
        const auto preds = guess ? guess_all(dataset) : load_predictions(predictions_path);
        fmt::print("{}\n", score_predictions(dataset, preds).formatted());
        return 0;
      }
      if (c.config.empty()) throw StageError("evaluate", "--config is required");
      const auto out = run_predict(resolve_config(c), eval_split, true);
      fmt::print("{}\n", out.evaluation->formatted());
    } else if (explain->parsed()) {
      fmt::print("{}", run_explain(resolve_config(c), explain_split, question_id));
    }
  } catch (const StageError& e) {
    fmt::print(stderr, "error [{}]: {}\n", e.stage(), e.what());
    return 1;
  } catch (const ParseError& e) {
    fmt::print(stderr, "error [input]: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
