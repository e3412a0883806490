#include "oad/m2t/text_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "oad/core/error.hpp"

namespace oad {

namespace {

constexpr double kProbabilityFloor = 1e-12;

void check_distribution(const Vector& p, int vocab) {
  require(p.size() == vocab, ErrorCode::kModelContract,
          "model returned " + std::to_string(p.size()) + " probabilities for a vocabulary of " +
              std::to_string(vocab));
  require(p.allFinite() && (p.array() >= 0.0).all(), ErrorCode::kModelContract,
          "model returned a negative or non-finite probability");
  const double sum = p.sum();
  require(std::abs(sum - 1.0) <= 1e-6, ErrorCode::kModelContract,
          "model distribution sums to " + std::to_string(sum));
}

}  // namespace

std::vector<std::string> tokenize_text(const std::string& sentence) {
  std::vector<std::string> out;
  std::istringstream in(sentence);
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
    out.push_back(w);
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  words_.insert(words_.end(), words.begin(), words.end());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const bool fresh = index_.emplace(words_[i], static_cast<int>(i)).second;
    require(fresh, ErrorCode::kInvalidInput, "duplicate vocabulary word '" + words_[i] + "'");
  }
}

Vocabulary Vocabulary::from_sentences(const std::vector<std::string>& sentences) {
  std::set<std::string> unique;
  for (const auto& s : sentences)
    for (auto& w : tokenize_text(s)) unique.insert(w);
  return Vocabulary(std::vector<std::string>(unique.begin(), unique.end()));
}

const std::string& Vocabulary::word(int id) const {
  require(id >= 0 && id < size(), ErrorCode::kInvalidInput, "text token " + std::to_string(id) + " outside vocabulary");
  return words_[static_cast<std::size_t>(id)];
}

int Vocabulary::id(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

TextTokenSequence Vocabulary::encode(const std::string& sentence) const {
  TextTokenSequence out;
  for (const auto& w : tokenize_text(sentence)) out.push_back(id(w));
  out.push_back(kEnd);
  return out;
}

std::string Vocabulary::decode(const TextTokenSequence& tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t == kPad || t == kBegin || t == kEnd) continue;
    if (!out.empty()) out += ' ';
    out += word(t);
  }
  return out;
}

double m2t_nll(const ConditionalSequenceModel& model, const TokenSequence& s, const TextTokenSequence& c) {
  TextTokenSequence prefix{Vocabulary::kBegin};
  std::size_t start = (!c.empty() && c.front() == Vocabulary::kBegin) ? 1 : 0;
  const int vocab = model.vocabulary_size();
  double nll = 0.0;
  for (std::size_t i = start; i < c.size(); ++i) {
    require(c[i] >= 0 && c[i] < vocab, ErrorCode::kInvalidInput, "target token outside vocabulary");
    const Vector p = model.distribution(s, prefix);
    check_distribution(p, vocab);
    nll -= std::log(std::max(p(c[i]), kProbabilityFloor));
    prefix.push_back(c[i]);
  }
  return nll;
}

TextTokenSequence greedy_decode(const ConditionalSequenceModel& model, const TokenSequence& s, int max_len) {
  require(max_len >= 1, ErrorCode::kInvalidInput, "max_len must be at least 1");
  TextTokenSequence out{Vocabulary::kBegin};
  const int vocab = model.vocabulary_size();
  for (int i = 0; i < max_len; ++i) {
    const Vector p = model.distribution(s, out);
    check_distribution(p, vocab);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < p.size(); ++k)
      if (p(k) > p(best)) best = k;
    out.push_back(static_cast<int>(best));
    if (best == Vocabulary::kEnd) break;
  }
  return out;
}

int dominant_token(const TokenSequence& s) {
  std::map<int, int> counts;
  for (int t : s) ++counts[t];
  int best = -1, best_count = 0;
  for (const auto& [token, n] : counts)
    if (n > best_count) {
      best = token;
      best_count = n;
    }
  return best;
}

BigramModel::BigramModel(Vocabulary vocab, double smoothing) : vocab_(std::move(vocab)), smoothing_(smoothing) {
  require(smoothing >= 0.0 && std::isfinite(smoothing), ErrorCode::kInvalidInput, "smoothing must be non-negative");
}

void BigramModel::add(const TokenSequence& s, const TextTokenSequence& text) {
  const int bucket = dominant_token(s);
  int prev = Vocabulary::kBegin;
  for (int t : text) {
    require(t >= 0 && t < vocab_.size(), ErrorCode::kInvalidInput, "text token outside vocabulary");
    if (bucket >= 0) buckets_[bucket][prev][t] += 1.0;
    pooled_[prev][t] += 1.0;
    prev = t;
  }
}

int BigramModel::bucket_for(const TokenSequence& s) const {
  std::map<int, int> counts;
  for (int t : s) ++counts[t];
  std::vector<std::pair<int, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [token, n] : ranked)
    if (buckets_.count(token)) return token;
  return -1;
}

Vector BigramModel::distribution(const TokenSequence& s, const TextTokenSequence& prefix) const {
  const int v = vocab_.size();
  Vector p = Vector::Constant(v, smoothing_);
  const int bucket = bucket_for(s);
  const Counts& counts = bucket < 0 ? pooled_ : buckets_.at(bucket);
  const int prev = prefix.empty() ? Vocabulary::kBegin : prefix.back();
  if (const auto it = counts.find(prev); it != counts.end())
    for (const auto& [next, n] : it->second) p(next) += n;
  const double total = p.sum();
  if (total <= 0.0) return Vector::Constant(v, 1.0 / double(v));
  return p / total;
}

void BigramModel::save(const std::filesystem::path& path) const {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& [bucket, counts] : buckets_)
    for (const auto& [prev, row] : counts)
      for (const auto& [next, n] : row) buckets.push_back({bucket, prev, next, n});
  const nlohmann::json words = std::vector<std::string>(vocab_.words().begin() + 4, vocab_.words().end());
  const nlohmann::json j = {{"vocabulary", words}, {"smoothing", smoothing_}, {"counts", buckets}};
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump() << '\n';
}

BigramModel BigramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    BigramModel m(Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), j.at("smoothing").get<double>());
    for (const auto& row : j.at("counts")) {
      const int bucket = row.at(0), prev = row.at(1), next = row.at(2);
      const double n = row.at(3);
      require(prev >= 0 && prev < m.vocab_.size() && next >= 0 && next < m.vocab_.size(), ErrorCode::kParse,
              "bigram count refers to a token outside the vocabulary");
      m.buckets_[bucket][prev][next] += n;
      m.pooled_[prev][next] += n;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

BigramModel train_bigram_baseline(std::span<const CaptionPair> corpus, double smoothing) {
  require(!corpus.empty(), ErrorCode::kInvalidInput, "caption corpus is empty");
  std::vector<std::string> sentences;
  for (const auto& pair : corpus) sentences.push_back(pair.caption);
  BigramModel model(Vocabulary::from_sentences(sentences), smoothing);
  for (const auto& pair : corpus) model.add(pair.motion, model.vocabulary().encode(pair.caption));
  return model;
}

std::vector<CaptionPair> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read " + path.string());
  std::vector<CaptionPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("tokens").get<TokenSequence>(), j.at("caption").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_corpus(std::span<const CaptionPair> corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& pair : corpus) out << nlohmann::json{{"tokens", pair.motion}, {"caption", pair.caption}}.dump() << '\n';
}

}  // namespace oad
