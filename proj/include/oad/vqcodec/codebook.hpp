#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oad/core/types.hpp"

namespace oad {

using TokenSequence = std::vector<int>;

struct Codebook {
  Matrix entries;  // K_e x d
  std::vector<std::uint64_t> usage_counts;
  std::vector<std::uint32_t> idle_steps;
  // EMA statistics, only maintained when the EMA update is enabled.
  Vector ema_counts;
  Matrix ema_sums;

  Codebook() = default;
  explicit Codebook(Matrix entries);

  int size() const { return static_cast<int>(entries.rows()); }
  int dim() const { return static_cast<int>(entries.cols()); }
};

struct Quantized {
  TokenSequence tokens;
  Matrix latents;
};

/// Nearest entry by squared Euclidean distance for each row of z; ties go
/// to the lowest index.
Quantized quantize(const Matrix& z, const Codebook& cb);

/// Codebook rows gathered by token.
Matrix lookup(const Codebook& cb, const TokenSequence& tokens);

enum class CodebookInit { kSample, kKMeans };
CodebookInit parse_codebook_init(const std::string& name);

/// "sample" picks K_e distinct rows at random; "kmeans" runs 10 Lloyd
/// iterations from that start.
Codebook init_codebook(const Matrix& samples, int size, CodebookInit method, std::uint64_t seed);

/// exp of the entropy of the token histogram.
double perplexity(const TokenSequence& tokens, int codebook_size);

// VQCB container: magic, version, K_e, d, row-major f64 entries.
void write_codebook(std::ostream& out, const Codebook& cb);
Codebook read_codebook(std::istream& in);

void save_tokens(const TokenSequence& tokens, const std::filesystem::path& path);
TokenSequence load_tokens(const std::filesystem::path& path);

}  // namespace oad
