#pragma once

// Reference BM25 used by the retrieval tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sciqa/retrieval.hpp"

namespace retrievaloracle {

using sciqa::CorpusLine;

// Independent BM25: re-tokenizes every sentence and scans the whole corpus.
inline std::vector<std::pair<std::size_t, double>> brute_force(const std::vector<CorpusLine>& corpus, const std::string& query,
                                                        double k1 = 1.2, double b = 0.75) {
  auto toks = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + " ") {
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
        cur += c;
      } else if (c >= 'A' && c <= 'Z') {
        cur += static_cast<char>(c - 'A' + 'a');
      } else if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
    return out;
  };
  std::vector<std::vector<std::string>> docs;
  double total = 0;
  for (const auto& l : corpus) {
    docs.push_back(toks(l.text));
    total += static_cast<double>(docs.back().size());
  }
  const double n = static_cast<double>(docs.size());
  const double avg = total / n;
  auto q = toks(query);
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  std::vector<std::pair<std::size_t, double>> scored;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    double s = 0;
    bool any = false;
    for (const auto& t : q) {
      double df = 0;
      for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), t) > 0 ? 1 : 0;
      const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
      if (tf == 0) continue;
      any = true;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * static_cast<double>(docs[d].size()) / avg));
    }
    if (any) scored.emplace_back(d, s);
  }
  std::stable_sort(scored.begin(), scored.end(), [](auto& x, auto& y) { return x.second > y.second; });
  return scored;
}

inline const std::vector<std::string> kQueries = {
    "Fruit contains seed.",
    "Day and night occurs due to the rotation of Earth.",
    "Plants need darkness.",
    "Water freezes at zero degrees Celsius.",
    "The Moon produces light.",
    "A thermometer measures temperature.",
    "Birds carry seeds from a fruit.",
    "Rubber conducts electricity.",
    "Water vapor forms clouds.",
    "Oxygen is released by trees into the air.",
};

}  // namespace retrievaloracle
