#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "oad/core/types.hpp"
#include "oad/vqcodec/codebook.hpp"

namespace oad {

using TextTokenSequence = std::vector<int>;

/// Word list with reserved ids 0 pad, 1 begin, 2 end, 3 unknown.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBegin = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnknown = 3;

  Vocabulary();
  /// Reserved entries followed by `words`; throws kInvalidInput on
  /// duplicates.
  explicit Vocabulary(const std::vector<std::string>& words);
  /// Reserved entries followed by the distinct corpus words, sorted.
  static Vocabulary from_sentences(const std::vector<std::string>& sentences);

  int size() const { return static_cast<int>(words_.size()); }
  const std::string& word(int id) const;
  int id(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }

  /// Lowercased whitespace tokens followed by the end token.
  TextTokenSequence encode(const std::string& sentence) const;
  /// Space-joined words, skipping pad, begin and end.
  std::string decode(const TextTokenSequence& tokens) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> tokenize_text(const std::string& sentence);

/// p(c_i | c_<i, s) over the whole vocabulary.
class ConditionalSequenceModel {
 public:
  virtual ~ConditionalSequenceModel() = default;
  virtual int vocabulary_size() const = 0;
  /// prefix starts with the begin token.
  virtual Vector distribution(const TokenSequence& s, const TextTokenSequence& prefix) const = 0;
};

/// -sum_i log p(c_i | begin, c_<i, s). A leading begin token in c is
/// context, not a scored target. Probabilities are floored at 1e-12.
/// Throws kModelContract on a distribution that is negative, non-finite or
/// sums away from 1 by more than 1e-6.
double m2t_nll(const ConditionalSequenceModel& model, const TokenSequence& s, const TextTokenSequence& c);

/// Begin token, then argmax (lowest index on ties) until the end token or
/// max_len generated tokens.
TextTokenSequence greedy_decode(const ConditionalSequenceModel& model, const TokenSequence& s, int max_len);

struct CaptionPair {
  TokenSequence motion;
  std::string caption;
};

/// Add-k bigram over text tokens, conditioned on the most frequent motion
/// token of s. When that bucket was never trained, the next most frequent
/// trained token of s is used, and failing that the pooled counts of all
/// buckets.
class BigramModel final : public ConditionalSequenceModel {
 public:
  BigramModel(Vocabulary vocab, double smoothing);

  void add(const TokenSequence& s, const TextTokenSequence& text);

  int vocabulary_size() const override { return vocab_.size(); }
  Vector distribution(const TokenSequence& s, const TextTokenSequence& prefix) const override;

  const Vocabulary& vocabulary() const { return vocab_; }
  double smoothing() const { return smoothing_; }
  /// Bucket used for s, or -1 for the pooled counts.
  int bucket_for(const TokenSequence& s) const;

  void save(const std::filesystem::path& path) const;
  static BigramModel load(const std::filesystem::path& path);

 private:
  using Counts = std::map<int, std::map<int, double>>;  // prev -> next -> count

  Vocabulary vocab_;
  double smoothing_;
  std::map<int, Counts> buckets_;
  Counts pooled_;
};

/// Most frequent token, lowest id on ties; -1 for an empty sequence.
int dominant_token(const TokenSequence& s);

BigramModel train_bigram_baseline(std::span<const CaptionPair> corpus, double smoothing = 0.1);

/// JSON lines {"tokens": [...], "caption": "..."}.
std::vector<CaptionPair> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const CaptionPair> corpus, const std::filesystem::path& path);

}  // namespace oad
