#include "oad/vqcodec/codebook.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "oad/core/binary_io.hpp"
#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"

namespace oad {

namespace {

constexpr std::uint32_t kCodebookVersion = 1;
constexpr int kLloydIterations = 10;

int nearest(const double* z, const Matrix& entries, Eigen::Index d) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < entries.rows(); ++k) {
    double dist = 0.0;
    for (Eigen::Index c = 0; c < d && dist < best_dist; ++c) {
      const double diff = z[c] - entries(k, c);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace

Codebook::Codebook(Matrix e)
    : entries(std::move(e)),
      usage_counts(static_cast<std::size_t>(entries.rows()), 0),
      idle_steps(static_cast<std::size_t>(entries.rows()), 0) {
  require(entries.rows() >= 2, ErrorCode::kInvalidInput, "codebook needs at least 2 entries");
  require(entries.cols() >= 1, ErrorCode::kInvalidInput, "codebook entries need a dimension");
  require(entries.allFinite(), ErrorCode::kInvalidInput, "codebook entries must be finite");
}

Quantized quantize(const Matrix& z, const Codebook& cb) {
  require(cb.entries.rows() > 0, ErrorCode::kInvalidState, "codebook is empty");
  require(z.cols() == cb.entries.cols(), ErrorCode::kDimension,
          "latent width " + std::to_string(z.cols()) + " does not match codebook dimension " +
              std::to_string(cb.entries.cols()));
  // Row-major copy so each latent is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = z;
  Quantized q;
  q.tokens.resize(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index t = 0; t < z.rows(); ++t)
    q.tokens[static_cast<std::size_t>(t)] = nearest(rows.data() + t * z.cols(), cb.entries, z.cols());
  q.latents = lookup(cb, q.tokens);
  return q;
}

Matrix lookup(const Codebook& cb, const TokenSequence& tokens) {
  Matrix out(static_cast<Eigen::Index>(tokens.size()), cb.entries.cols());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    require(tokens[t] >= 0 && tokens[t] < cb.size(), ErrorCode::kInvalidInput,
            "token " + std::to_string(tokens[t]) + " outside codebook");
    out.row(static_cast<Eigen::Index>(t)) = cb.entries.row(tokens[t]);
  }
  return out;
}

CodebookInit parse_codebook_init(const std::string& name) {
  if (name == "sample") return CodebookInit::kSample;
  if (name == "kmeans") return CodebookInit::kKMeans;
  fail(ErrorCode::kConfig, "unknown codebook init '" + name + "' (expected sample or kmeans)");
}

Codebook init_codebook(const Matrix& samples, int size, CodebookInit method, std::uint64_t seed) {
  require(size >= 2, ErrorCode::kInvalidInput, "codebook size must be at least 2");
  require(samples.rows() >= size, ErrorCode::kInvalidInput,
          "codebook init needs at least " + std::to_string(size) + " samples, got " + std::to_string(samples.rows()));
  require(samples.allFinite(), ErrorCode::kInvalidInput, "codebook init samples must be finite");
  Rng rng = Rng::substream(seed, "codebook-init");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(samples.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  rng.shuffle(order);

  Matrix entries(size, samples.cols());
  int filled = 0;
  for (Eigen::Index idx : order) {
    if (filled == size) break;
    bool duplicate = false;
    for (int k = 0; k < filled && !duplicate; ++k)
      duplicate = (entries.row(k) - samples.row(idx)).cwiseAbs().maxCoeff() <= 1e-12;
    if (!duplicate) entries.row(filled++) = samples.row(idx);
  }
  require(filled == size, ErrorCode::kInvalidInput,
          "only " + std::to_string(filled) + " distinct samples for a codebook of " + std::to_string(size));

  if (method == CodebookInit::kKMeans) {
    Codebook cb(entries);
    for (int it = 0; it < kLloydIterations; ++it) {
      const Quantized q = quantize(samples, cb);
      Matrix sums = Matrix::Zero(size, samples.cols());
      Vector counts = Vector::Zero(size);
      for (std::size_t i = 0; i < q.tokens.size(); ++i) {
        sums.row(q.tokens[i]) += samples.row(static_cast<Eigen::Index>(i));
        counts(q.tokens[i]) += 1.0;
      }
      for (int k = 0; k < size; ++k)
        if (counts(k) > 0) cb.entries.row(k) = sums.row(k) / counts(k);
    }
    entries = cb.entries;
  }
  return Codebook(entries);
}

double perplexity(const TokenSequence& tokens, int codebook_size) {
  if (tokens.empty()) return 0.0;
  std::vector<double> counts(static_cast<std::size_t>(codebook_size), 0.0);
  for (int t : tokens) {
    require(t >= 0 && t < codebook_size, ErrorCode::kInvalidInput, "token outside codebook");
    counts[static_cast<std::size_t>(t)] += 1.0;
  }
  double entropy = 0.0;
  for (double c : counts) {
    if (c == 0.0) continue;
    const double p = c / double(tokens.size());
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

void write_codebook(std::ostream& out, const Codebook& cb) {
  binio::write_magic(out, "VQCB");
  binio::write_u32(out, kCodebookVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(cb.size()));
  binio::write_u32(out, static_cast<std::uint32_t>(cb.dim()));
  for (Eigen::Index k = 0; k < cb.entries.rows(); ++k)
    for (Eigen::Index c = 0; c < cb.entries.cols(); ++c) binio::write_f64(out, cb.entries(k, c));
}

Codebook read_codebook(std::istream& in) {
  binio::expect_magic(in, "VQCB", "codebook");
  const std::uint32_t version = binio::read_u32(in);
  require(version == kCodebookVersion, ErrorCode::kParse, "unsupported VQCB version " + std::to_string(version));
  const std::uint32_t k = binio::read_u32(in);
  const std::uint32_t d = binio::read_u32(in);
  require(k >= 2 && k <= (1u << 20) && d >= 1 && d <= (1u << 16), ErrorCode::kParse, "implausible codebook shape");
  Matrix entries(k, d);
  for (Eigen::Index r = 0; r < entries.rows(); ++r)
    for (Eigen::Index c = 0; c < entries.cols(); ++c) entries(r, c) = binio::read_f64(in);
  return Codebook(std::move(entries));
}

void save_tokens(const TokenSequence& tokens, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << nlohmann::json(tokens).dump() << '\n';
}

TokenSequence load_tokens(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in).get<TokenSequence>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace oad
