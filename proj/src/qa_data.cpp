#include "sciqa/qa_data.hpp"

#include <json.hpp>

#include <cmath>
#include <fmt/format.h>
#include <sstream>

#include "sciqa/common.hpp"

namespace sciqa {

using nlohmann::json;

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  throw Error("unknown split '" + name + "' (expected train, dev or test)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Question Question::make(std::string id, std::string stem, std::vector<Option> options,
                        std::string answer_key) {
  if (id.empty()) throw Error("question id is empty");
  if (options.size() < 2) throw Error("question " + id + " has fewer than two options");
  std::set<std::string> labels;
  for (const auto& opt : options) {
    if (!labels.insert(opt.label).second) {
      throw Error("question " + id + " has duplicate option label '" + opt.label + "'");
    }
  }
  if (!labels.contains(answer_key)) {
    throw Error("question " + id + ": answer key '" + answer_key + "' is not among the option labels");
  }
  Question q;
  q.id_ = std::move(id);
  q.stem_ = std::move(stem);
  q.options_ = std::move(options);
  q.answer_key_ = std::move(answer_key);
  return q;
}

bool Question::has_label(const std::string& label) const {
  for (const auto& opt : options_) {
    if (opt.label == label) return true;
  }
  return false;
}

const Option& Question::option(const std::string& label) const {
  for (const auto& opt : options_) {
    if (opt.label == label) return opt;
  }
  throw Error("question " + id_ + " has no option '" + label + "'");
}

Dataset::Dataset(Split split, std::vector<Question> questions)
    : split_(split), questions_(std::move(questions)) {
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    if (!by_id_.emplace(questions_[i].id(), i).second) {
      throw Error("duplicate question id '" + questions_[i].id() + "'");
    }
  }
}

const Question* Dataset::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &questions_[it->second];
}

namespace {

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw Error(std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) throw Error(std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

template <typename Fn>
void for_each_line(const std::string& contents, const std::string& source, Fn&& fn) {
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
}

}  // namespace

Dataset parse_dataset(const std::string& contents, Split split, const std::string& source) {
  std::vector<Question> questions;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  std::istringstream in(contents);
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto obj = json::parse(line);
      auto id = require_string(obj, "id");
      const auto& q = require(obj, "question");
      auto stem = require_string(q, "stem");
      const auto& choices = require(q, "choices");
      if (!choices.is_array()) throw Error("field 'choices' is not an array");
      std::vector<Option> options;
      for (const auto& c : choices) {
        options.push_back({require_string(c, "label"), require_string(c, "text")});
      }
      auto key = require_string(obj, "answerKey");
      if (!seen.insert(id).second) throw Error("duplicate question id '" + id + "'");
      questions.push_back(Question::make(std::move(id), std::move(stem), std::move(options), std::move(key)));
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return Dataset(split, std::move(questions));
}

Dataset load_dataset(const std::string& path, Split split) {
  return parse_dataset(read_file(path), split, path);
}

std::vector<Prediction> parse_predictions(const std::string& contents, const std::string& source) {
  std::vector<Prediction> preds;
  for_each_line(contents, source, [&](const json& obj) {
    Prediction p;
    p.question_id = require_string(obj, "id");
    const auto& chosen = require(obj, "chosen");
    if (!chosen.is_array() || chosen.empty()) throw Error("field 'chosen' must be a nonempty array");
    for (const auto& label : chosen) p.chosen_labels.insert(label.get<std::string>());
    preds.push_back(std::move(p));
  });
  return preds;
}

std::vector<Prediction> load_predictions(const std::string& path) {
  return parse_predictions(read_file(path), path);
}

std::string format_predictions(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    json obj;
    obj["id"] = p.question_id;
    obj["chosen"] = std::vector<std::string>(p.chosen_labels.begin(), p.chosen_labels.end());
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_predictions(const std::string& path, const std::vector<Prediction>& preds) {
  write_file(path, format_predictions(preds));
}

double EvalResult::total_score() const {
  if (num_questions == 0) return 0.0;
  return 100.0 * boost::rational_cast<double>(total_points) / static_cast<double>(num_questions);
}

std::string EvalResult::formatted() const { return format_score(total_score()); }

EvalResult score_predictions(const Dataset& dataset, const std::vector<Prediction>& preds) {
  EvalResult result;
  result.num_questions = dataset.size();
  for (const auto& q : dataset.questions()) result.per_question_points[q.id()] = Points(0);

  std::set<std::string> seen;
  for (const auto& p : preds) {
    const Question* q = dataset.find(p.question_id);
    if (q == nullptr) throw Error("prediction for unknown question id '" + p.question_id + "'");
    if (!seen.insert(p.question_id).second) {
      throw Error("duplicate prediction for question id '" + p.question_id + "'");
    }
    if (p.chosen_labels.empty()) throw Error("empty prediction for question id '" + p.question_id + "'");
    for (const auto& label : p.chosen_labels) {
      if (!q->has_label(label)) {
        throw Error("prediction for '" + p.question_id + "' names unknown label '" + label + "'");
      }
    }
    if (p.chosen_labels.contains(q->answer_key())) {
      result.per_question_points[q->id()] = Points(1, static_cast<long long>(p.chosen_labels.size()));
    }
  }
  for (const auto& [id, pts] : result.per_question_points) result.total_points += pts;
  return result;
}

std::vector<Prediction> guess_all(const Dataset& dataset) {
  std::vector<Prediction> preds;
  preds.reserve(dataset.size());
  for (const auto& q : dataset.questions()) {
    Prediction p{q.id(), {}};
    for (const auto& opt : q.options()) p.chosen_labels.insert(opt.label);
    preds.push_back(std::move(p));
  }
  return preds;
}

double upper_bound_score(double solved_fraction, int num_choices) {
  if (solved_fraction < 0.0 || solved_fraction > 1.0) throw Error("solved fraction must lie in [0, 1]");
  if (num_choices < 1) throw Error("number of choices must be positive");
  return 100.0 * (solved_fraction + (1.0 - solved_fraction) / num_choices);
}

std::string format_score(double score) { return fmt::format("{:.2f}", score); }

}  // namespace sciqa
