#pragma once

#include <boost/rational.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace sciqa {

enum class Split { train, dev, test };

Split parse_split(const std::string& name);
std::string to_string(Split split);

struct Option {
  std::string label;
  std::string text;
};

/// One multiple-choice item. Construct through `Question::make`, which
/// enforces unique labels, at least two options and a known answer key.
class Question {
 public:
  static Question make(std::string id, std::string stem, std::vector<Option> options,
                       std::string answer_key);

  const std::string& id() const { return id_; }
  const std::string& stem() const { return stem_; }
  const std::vector<Option>& options() const { return options_; }
  const std::string& answer_key() const { return answer_key_; }

  bool has_label(const std::string& label) const;
  const Option& option(const std::string& label) const;

 private:
  Question() = default;

  std::string id_;
  std::string stem_;
  std::vector<Option> options_;
  std::string answer_key_;
};

class Dataset {
 public:
  Dataset(Split split, std::vector<Question> questions);

  Split split() const { return split_; }
  const std::vector<Question>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }
  const Question* find(const std::string& id) const;

 private:
  Split split_;
  std::vector<Question> questions_;
  std::map<std::string, std::size_t> by_id_;
};

struct Prediction {
  std::string question_id;
  std::set<std::string> chosen_labels;
};

using Points = boost::rational<long long>;

struct EvalResult {
  std::map<std::string, Points> per_question_points;
  Points total_points{0};  // sum over questions
  std::size_t num_questions = 0;

  /// 100 x mean points, as a double.
  double total_score() const;
  /// Two-decimal rendering, e.g. "25.02".
  std::string formatted() const;
};

/// Reads the one-JSON-object-per-line question format. Blank lines are skipped.
/// Throws ParseError naming the offending line.
Dataset load_dataset(const std::string& path, Split split);
Dataset parse_dataset(const std::string& contents, Split split,
                      const std::string& source = "<memory>");

std::vector<Prediction> load_predictions(const std::string& path);
std::vector<Prediction> parse_predictions(const std::string& contents,
                                          const std::string& source = "<memory>");
std::string format_predictions(const std::vector<Prediction>& preds);
void save_predictions(const std::string& path, const std::vector<Prediction>& preds);

/// 1/k for a k-way tie containing the key, else 0. Questions without a
/// prediction earn 0.
EvalResult score_predictions(const Dataset& dataset, const std::vector<Prediction>& preds);

/// Selects every option of every question.
std::vector<Prediction> guess_all(const Dataset& dataset);

/// Percentage obtained by answering `solved_fraction` of the questions
/// correctly and guessing uniformly among `num_choices` options on the rest.
double upper_bound_score(double solved_fraction, int num_choices = 4);

std::string format_score(double score);

}  // namespace sciqa
