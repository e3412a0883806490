#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "oad/motionfeat/features.hpp"
#include "oad/vqcodec/codebook.hpp"
#include "oad/vqcodec/tinynet.hpp"

namespace oad {

enum class OptimizerKind { kRms, kSgd };

struct VqConfig {
  int input_dim = 0;
  int hidden = 32;
  int latent_dim = 16;
  int codebook_size = 1024;
  int window = 32;
  double beta_commit = 0.25;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kRms;
  double rms_decay = 0.99;
  double rms_epsilon = 1e-8;
  bool ema_codebook = false;
  double ema_decay = 0.99;
  int dead_code_steps = 256;

  void validate() const;
};

struct VqModel {
  VqConfig config;
  TinyNet encoder;
  TinyNet decoder;
  Codebook codebook;

  Matrix encode(const Matrix& window) const;
  TokenSequence tokenize(const Matrix& window) const;
  Matrix decode(const Matrix& latents) const;
  Matrix reconstruct(const Matrix& window) const;
};

Matrix encode(const TinyNet& encoder, const Matrix& window);
/// Decoder output cropped to window_length rows.
Matrix decode(const TinyNet& decoder, const Matrix& latents, Eigen::Index window_length);

/// Fresh networks from seed; the codebook is drawn from encoder outputs of
/// init_windows, which must supply at least codebook_size latent rows.
VqModel make_vq_model(const VqConfig& config, std::span<const Matrix> init_windows, std::uint64_t seed,
                      CodebookInit init = CodebookInit::kSample);

/// Consecutive windows of the feature matrix; a trailing partial window is
/// dropped.
std::vector<Matrix> make_windows(const MotionSequence& m, int window, int stride);

struct LossTerms {
  double reconstruction = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double total = 0.0;
};

/// mean|m_hat - m| + mean((sg z_enc - z_q)^2) + beta mean((z_enc - sg z_q)^2).
LossTerms vqvae_loss(const Matrix& m, const Matrix& m_hat, const Matrix& z_enc, const Matrix& z_q, double beta_commit);

/// Terms that contribute gradients. Values of all terms are always reported.
struct LossMask {
  bool reconstruction = true;
  bool codebook = true;
  bool commitment = true;
};

struct VqGradients {
  std::vector<Matrix> encoder;
  std::vector<Matrix> decoder;
  Matrix codebook;

  static VqGradients zeros(const VqModel& model);
};

struct BatchResult {
  LossTerms loss;
  std::vector<TokenSequence> tokens;
  Matrix encoder_outputs;  // all windows' latents stacked
};

/// Batch-mean loss and its gradients, accumulated into grads. The decoder
/// input gradient is copied straight through to the encoder. With
/// bypass_quantizer the decoder sees z_enc itself (plain autoencoder).
BatchResult vqvae_gradients(const VqModel& model, std::span<const Matrix> windows, VqGradients& grads,
                            const LossMask& mask = {}, bool bypass_quantizer = false);

struct OptimizerState {
  std::vector<Matrix> encoder;
  std::vector<Matrix> decoder;
  Matrix codebook;
  std::uint64_t step = 0;

  static OptimizerState for_model(const VqModel& model);
};

void apply_gradients(VqModel& model, OptimizerState& state, const VqGradients& grads);

struct StepReport {
  LossTerms loss;
  double perplexity = 0.0;
  int active_codes = 0;
  int reinitialized = 0;
};

/// One update on a batch. seed drives dead-code reinitialization only.
/// Throws kDivergence naming the first non-finite loss term.
StepReport train_step(VqModel& model, OptimizerState& state, std::span<const Matrix> windows, std::uint64_t seed);

struct TrainOptions {
  int steps = 500;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

using StepCallback = std::function<void(int step, const StepReport&)>;

/// Minibatches are drawn with replacement from windows using the seed.
std::vector<StepReport> train_vq(VqModel& model, OptimizerState& state, std::span<const Matrix> windows,
                                 const TrainOptions& options, const StepCallback& on_step = {});

// Directory with vq.json, encoder.tnet, decoder.tnet, codebook.vqcb.
void save_vq_model(const VqModel& model, const std::filesystem::path& dir);
VqModel load_vq_model(const std::filesystem::path& dir);

}  // namespace oad
