#include "sciqa/retrieval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "sciqa/common.hpp"
#include "sciqa/lexicon.hpp"

namespace sciqa {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> index_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::string cur;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      terms.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) terms.push_back(std::move(cur));
  return terms;
}

bool has_only_allowed_characters(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto u = static_cast<unsigned char>(s[i]);
    if (u >= 0x20 && u <= 0x7e) continue;
    // U+2013, U+2014, U+2018, U+2019, U+201C, U+201D
    if (u == 0xe2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      auto t = static_cast<unsigned char>(s[i + 2]);
      if (t == 0x93 || t == 0x94 || t == 0x98 || t == 0x99 || t == 0x9c || t == 0x9d) {
        i += 2;
        continue;
      }
    }
    return false;
  }
  return true;
}

bool NoiseFilter::is_noisy(std::string_view sentence) const {
  if (!has_only_allowed_characters(sentence)) return true;
  std::size_t words = 0;
  for (const auto& tok : tokenize(sentence)) {
    if (!tok.is_word) continue;
    ++words;
    if (negation_words.contains(tok.lower)) return true;
  }
  return words > max_tokens;
}

std::vector<CorpusLine> read_corpus(std::istream& in) {
  std::vector<CorpusLine> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    CorpusLine cl;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      cl.id = trim(line.substr(0, tab));
      cl.text = trim(line.substr(tab + 1));
      if (cl.id.empty()) throw ParseError("<corpus>", lineno, "empty sentence id before tab");
    } else {
      cl.text = trim(line);
    }
    if (cl.text.empty()) continue;
    if (cl.id.empty()) cl.id = "L" + std::to_string(lineno);
    lines.push_back(std::move(cl));
  }
  return lines;
}

std::vector<CorpusLine> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  return read_corpus(in);
}

CorpusIndex CorpusIndex::build(const std::vector<CorpusLine>& lines) {
  CorpusIndex index;
  std::unordered_map<std::string, std::uint32_t> seen;
  for (const auto& line : lines) {
    if (trim(line.text).empty()) continue;
    const auto doc = static_cast<std::uint32_t>(index.texts_.size());
    std::string id = line.id.empty() ? "D" + std::to_string(doc) : line.id;
    if (!seen.emplace(id, doc).second) throw Error("duplicate sentence id '" + id + "'");
    auto terms = index_terms(line.text);
    std::map<std::string, std::uint32_t> tf;
    for (auto& t : terms) ++tf[t];
    for (auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    index.ids_.push_back(std::move(id));
    index.texts_.push_back(line.text);
    index.lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
  }
  index.finalize();
  return index;
}

void CorpusIndex::finalize() {
  double total = 0.0;
  for (auto len : lengths_) total += len;
  avg_length_ = lengths_.empty() ? 0.0 : total / static_cast<double>(lengths_.size());
}

std::size_t CorpusIndex::document_frequency(const std::string& term) const {
  auto* p = postings(term);
  return p == nullptr ? 0 : p->size();
}

const std::vector<Posting>* CorpusIndex::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

double CorpusIndex::idf(const std::string& term) const {
  const double n = static_cast<double>(size());
  const double df = static_cast<double>(document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredDoc> CorpusIndex::rank(std::string_view query, std::size_t limit,
                                         const Bm25Params& params) const {
  std::vector<ScoredDoc> out;
  if (size() == 0 || limit == 0) return out;
  auto terms = index_terms(query);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& term : terms) {
    const auto* plist = postings(term);
    if (plist == nullptr) continue;
    const double w = idf(term);
    for (const auto& p : *plist) {
      const double tf = p.tf;
      const double norm = params.k1 * (1.0 - params.b + params.b * lengths_[p.doc] / avg_length_);
      acc[p.doc] += w * tf * (params.k1 + 1.0) / (tf + norm);
    }
  }
  out.reserve(acc.size());
  for (const auto& [doc, score] : acc) out.push_back({doc, score});
  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    return a.score != b.score ? a.score > b.score : a.doc < b.doc;
  };
  if (out.size() > limit) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(limit), out.end(), better);
    out.resize(limit);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  return out;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error("index postings file is truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

constexpr char kPostingsMagic[] = "SQIXPOST";

}  // namespace

void CorpusIndex::save(const std::string& dir, const std::string& corpus_checksum) const {
  fs::create_directories(dir);
  std::string sentences;
  for (std::size_t i = 0; i < texts_.size(); ++i) {
    sentences += ids_[i];
    sentences += '\t';
    sentences += texts_[i];
    sentences += '\n';
  }
  std::string postings(kPostingsMagic, 8);
  put_u32(postings, kFormatVersion);
  put_u32(postings, static_cast<std::uint32_t>(postings_.size()));
  for (const auto& [term, plist] : postings_) {
    put_u32(postings, static_cast<std::uint32_t>(term.size()));
    postings += term;
    put_u32(postings, static_cast<std::uint32_t>(plist.size()));
    for (const auto& p : plist) {
      put_u32(postings, p.doc);
      put_u32(postings, p.tf);
    }
  }
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["tokenizer"] = {{"lowercase", true}, {"split", "non-alphanumeric"}, {"stemming", false}};
  manifest["corpus_sha256"] = corpus_checksum;
  manifest["num_sentences"] = texts_.size();
  manifest["num_terms"] = postings_.size();
  manifest["sentences_sha256"] = sha256_hex(sentences);
  manifest["postings_sha256"] = sha256_hex(postings);
  write_file((fs::path(dir) / "sentences.tsv").string(), sentences);
  write_file((fs::path(dir) / "postings.bin").string(), postings);
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::string CorpusIndex::stored_checksum(const std::string& dir) {
  try {
    auto manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    if (manifest.value("format_version", 0) != kFormatVersion) return {};
    return manifest.value("corpus_sha256", std::string{});
  } catch (const std::exception&) {
    return {};
  }
}

CorpusIndex CorpusIndex::load(const std::string& dir) {
  const auto manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
  if (manifest.at("format_version").get<int>() != kFormatVersion) {
    throw Error("index " + dir + " has unsupported format version");
  }
  const auto sentences = read_file((fs::path(dir) / "sentences.tsv").string());
  const auto postings = read_file((fs::path(dir) / "postings.bin").string());
  if (sha256_hex(sentences) != manifest.at("sentences_sha256").get<std::string>() ||
      sha256_hex(postings) != manifest.at("postings_sha256").get<std::string>()) {
    throw Error("index " + dir + " failed checksum verification");
  }

  CorpusIndex index;
  std::istringstream in(sentences);
  std::string line;
  while (std::getline(in, line)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("corrupt sentences.tsv in " + dir);
    index.ids_.push_back(line.substr(0, tab));
    index.texts_.push_back(line.substr(tab + 1));
    index.lengths_.push_back(0);
  }

  Reader r(postings);
  if (r.bytes(8) != std::string(kPostingsMagic, 8) || r.u32() != kFormatVersion) {
    throw Error("bad postings header in " + dir);
  }
  const auto num_terms = r.u32();
  for (std::uint32_t t = 0; t < num_terms; ++t) {
    auto term = r.bytes(r.u32());
    auto count = r.u32();
    std::vector<Posting> plist(count);
    for (auto& p : plist) {
      p.doc = r.u32();
      p.tf = r.u32();
      if (p.doc >= index.texts_.size()) throw Error("posting refers to missing sentence in " + dir);
      index.lengths_[p.doc] += p.tf;
    }
    index.postings_.emplace(std::move(term), std::move(plist));
  }
  if (!r.done()) throw Error("trailing bytes in postings file of " + dir);
  index.finalize();
  return index;
}

std::vector<SentenceHit> search_text(const CorpusIndex& index, std::string_view query,
                                     const RetrievalConfig& config) {
  if (config.k == 0) throw Error("retrieval k must be at least 1");
  std::vector<SentenceHit> hits;
  const auto candidates = index.rank(query, config.k * std::max<std::size_t>(1, config.overfetch_factor), config.bm25);
  for (const auto& c : candidates) {
    if (hits.size() == config.k) break;
    const auto& text = index.text(c.doc);
    if (config.filter.is_noisy(text)) continue;
    hits.push_back({c.doc, index.id(c.doc), text, c.score});
  }
  return hits;
}

std::vector<SentenceHit> search_supports(const CorpusIndex& index, const Hypothesis& hypothesis,
                                         const RetrievalConfig& config) {
  return search_text(index, hypothesis.text, config);
}

}  // namespace sciqa
