#include "oad/vqcodec/vqvae.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "oad/core/error.hpp"
#include "oad/core/rng.hpp"

namespace oad {

namespace {

void check_finite_term(double value, const char* name) {
  if (!std::isfinite(value)) fail(ErrorCode::kDivergence, std::string("non-finite ") + name + " loss term");
}

void update(Matrix& param, Matrix& accum, const Matrix& grad, const VqConfig& c) {
  if (c.optimizer == OptimizerKind::kSgd) {
    param -= c.learning_rate * grad;
    return;
  }
  accum = c.rms_decay * accum + (1.0 - c.rms_decay) * grad.cwiseAbs2();
  param.array() -= c.learning_rate * grad.array() / (accum.array().sqrt() + c.rms_epsilon);
}

void ema_update(Codebook& cb, const Matrix& z, const std::vector<int>& tokens, double decay) {
  if (cb.ema_counts.size() != cb.size()) {
    cb.ema_counts = Vector::Ones(cb.size());
    cb.ema_sums = cb.entries;
  }
  Vector counts = Vector::Zero(cb.size());
  Matrix sums = Matrix::Zero(cb.size(), cb.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    counts(tokens[i]) += 1.0;
    sums.row(tokens[i]) += z.row(static_cast<Eigen::Index>(i));
  }
  cb.ema_counts = decay * cb.ema_counts + (1.0 - decay) * counts;
  cb.ema_sums = decay * cb.ema_sums + (1.0 - decay) * sums;
  for (int k = 0; k < cb.size(); ++k)
    if (cb.ema_counts(k) > 1e-12) cb.entries.row(k) = cb.ema_sums.row(k) / cb.ema_counts(k);
}

const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "rms"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "rms") return OptimizerKind::kRms;
  fail(ErrorCode::kConfig, "unknown optimizer '" + s + "'");
}

}  // namespace

void VqConfig::validate() const {
  require(input_dim > 0, ErrorCode::kConfig, "vq input_dim must be positive");
  require(hidden > 0 && latent_dim > 0, ErrorCode::kConfig, "vq hidden and latent_dim must be positive");
  require(codebook_size >= 2, ErrorCode::kConfig, "codebook size must be at least 2");
  require(window >= 4, ErrorCode::kConfig, "window must be at least 4 frames");
  require(beta_commit > 0.0, ErrorCode::kConfig, "beta_commit must be positive");
  require(learning_rate >= 0.0, ErrorCode::kConfig, "learning rate must be non-negative");
  require(ema_decay > 0.0 && ema_decay < 1.0, ErrorCode::kConfig, "ema decay must lie in (0, 1)");
  require(dead_code_steps > 0, ErrorCode::kConfig, "dead_code_steps must be positive");
}

Matrix encode(const TinyNet& encoder, const Matrix& window) {
  require(window.cols() == encoder.input_channels(), ErrorCode::kDimension,
          "window has D_p " + std::to_string(window.cols()) + ", encoder expects " +
              std::to_string(encoder.input_channels()));
  return encoder.forward(window);
}

Matrix decode(const TinyNet& decoder, const Matrix& latents, Eigen::Index window_length) {
  require(latents.cols() == decoder.input_channels(), ErrorCode::kDimension, "latent width does not match decoder");
  Matrix out = decoder.forward(latents);
  require(out.rows() >= window_length, ErrorCode::kDimension, "decoder output shorter than the window");
  return out.topRows(window_length);
}

Matrix VqModel::encode(const Matrix& window) const {
  require(window.rows() == config.window, ErrorCode::kDimension,
          "window has " + std::to_string(window.rows()) + " frames, model expects " + std::to_string(config.window));
  return oad::encode(encoder, window);
}

TokenSequence VqModel::tokenize(const Matrix& window) const { return quantize(encode(window), codebook).tokens; }

Matrix VqModel::decode(const Matrix& latents) const { return oad::decode(decoder, latents, config.window); }

Matrix VqModel::reconstruct(const Matrix& window) const { return decode(quantize(encode(window), codebook).latents); }

VqModel make_vq_model(const VqConfig& config, std::span<const Matrix> init_windows, std::uint64_t seed,
                      CodebookInit init) {
  config.validate();
  Rng rng = Rng::substream(seed, "vq-init");
  VqModel m;
  m.config = config;
  m.encoder = make_encoder(config.input_dim, config.hidden, config.latent_dim);
  m.decoder = make_decoder(config.latent_dim, config.hidden, config.input_dim);
  m.encoder.initialize(rng);
  m.decoder.initialize(rng);
  std::vector<Matrix> latents;
  Eigen::Index rows = 0;
  for (const Matrix& w : init_windows) {
    latents.push_back(m.encode(w));
    rows += latents.back().rows();
  }
  Matrix samples(rows, config.latent_dim);
  Eigen::Index at = 0;
  for (const Matrix& z : latents) {
    samples.middleRows(at, z.rows()) = z;
    at += z.rows();
  }
  m.codebook = init_codebook(samples, config.codebook_size, init, seed);
  return m;
}

std::vector<Matrix> make_windows(const MotionSequence& m, int window, int stride) {
  require(window > 0 && stride > 0, ErrorCode::kInvalidInput, "window and stride must be positive");
  std::vector<Matrix> out;
  for (Eigen::Index start = 0; start + window <= m.frames.rows(); start += stride)
    out.push_back(m.frames.middleRows(start, window));
  return out;
}

LossTerms vqvae_loss(const Matrix& m, const Matrix& m_hat, const Matrix& z_enc, const Matrix& z_q, double beta_commit) {
  require(m.rows() == m_hat.rows() && m.cols() == m_hat.cols(), ErrorCode::kDimension,
          "reconstruction shape does not match the window");
  require(z_enc.rows() == z_q.rows() && z_enc.cols() == z_q.cols(), ErrorCode::kDimension,
          "encoder and quantized latents differ in shape");
  require(m.size() > 0 && z_enc.size() > 0, ErrorCode::kDimension, "empty loss inputs");
  LossTerms l;
  l.reconstruction = (m_hat - m).cwiseAbs().mean();
  const double sq = (z_enc - z_q).cwiseAbs2().mean();
  l.codebook = sq;
  l.commitment = beta_commit * sq;
  l.total = l.reconstruction + l.codebook + l.commitment;
  return l;
}

VqGradients VqGradients::zeros(const VqModel& model) {
  return {model.encoder.zero_gradients(), model.decoder.zero_gradients(),
          Matrix::Zero(model.codebook.entries.rows(), model.codebook.entries.cols())};
}

BatchResult vqvae_gradients(const VqModel& model, std::span<const Matrix> windows, VqGradients& grads,
                            const LossMask& mask, bool bypass_quantizer) {
  require(!windows.empty(), ErrorCode::kInvalidInput, "empty training batch");
  const double inv_batch = 1.0 / double(windows.size());
  const double beta = model.config.beta_commit;
  BatchResult result;
  std::vector<Matrix> encoded;
  Eigen::Index total_rows = 0;
  for (const Matrix& window : windows) {
    require(window.rows() == model.config.window && window.cols() == model.config.input_dim, ErrorCode::kDimension,
            "training window shape does not match the model");
    Tape enc_tape, dec_tape;
    const Matrix z_enc = model.encoder.forward_train(window, enc_tape);
    const Quantized q = quantize(z_enc, model.codebook);
    const Matrix& z_dec = bypass_quantizer ? z_enc : q.latents;
    const Matrix full = model.decoder.forward_train(z_dec, dec_tape);
    require(full.rows() >= window.rows(), ErrorCode::kDimension, "decoder output shorter than the window");
    const Matrix m_hat = full.topRows(window.rows());

    const LossTerms l = vqvae_loss(window, m_hat, z_enc, bypass_quantizer ? z_enc : q.latents, beta);
    result.loss.reconstruction += inv_batch * l.reconstruction;
    result.loss.codebook += inv_batch * l.codebook;
    result.loss.commitment += inv_batch * l.commitment;

    Matrix grad_z = Matrix::Zero(z_enc.rows(), z_enc.cols());
    if (mask.reconstruction) {
      Matrix grad_full = Matrix::Zero(full.rows(), full.cols());
      grad_full.topRows(window.rows()) =
          (m_hat - window).array().sign().matrix() * (inv_batch / double(window.size()));
      grad_z += model.decoder.backward(grad_full, dec_tape, grads.decoder);
    }
    if (!bypass_quantizer) {
      const Matrix diff = z_enc - q.latents;
      const double scale = 2.0 * inv_batch / double(diff.size());
      if (mask.codebook)
        for (std::size_t t = 0; t < q.tokens.size(); ++t)
          grads.codebook.row(q.tokens[t]) -= scale * diff.row(static_cast<Eigen::Index>(t));
      if (mask.commitment) grad_z += beta * scale * diff;
    }
    model.encoder.backward(grad_z, enc_tape, grads.encoder);

    result.tokens.push_back(q.tokens);
    total_rows += z_enc.rows();
    encoded.push_back(z_enc);
  }
  result.loss.total = result.loss.reconstruction + result.loss.codebook + result.loss.commitment;
  result.encoder_outputs.resize(total_rows, model.config.latent_dim);
  Eigen::Index at = 0;
  for (const Matrix& z : encoded) {
    result.encoder_outputs.middleRows(at, z.rows()) = z;
    at += z.rows();
  }
  return result;
}

OptimizerState OptimizerState::for_model(const VqModel& model) {
  OptimizerState s;
  s.encoder = model.encoder.zero_gradients();
  s.decoder = model.decoder.zero_gradients();
  s.codebook = Matrix::Zero(model.codebook.entries.rows(), model.codebook.entries.cols());
  return s;
}

void apply_gradients(VqModel& model, OptimizerState& state, const VqGradients& grads) {
  const VqConfig& c = model.config;
  auto enc = model.encoder.parameters();
  for (std::size_t i = 0; i < enc.size(); ++i) update(*enc[i], state.encoder[i], grads.encoder[i], c);
  auto dec = model.decoder.parameters();
  for (std::size_t i = 0; i < dec.size(); ++i) update(*dec[i], state.decoder[i], grads.decoder[i], c);
  if (!c.ema_codebook) update(model.codebook.entries, state.codebook, grads.codebook, c);
  ++state.step;
}

StepReport train_step(VqModel& model, OptimizerState& state, std::span<const Matrix> windows, std::uint64_t seed) {
  VqGradients grads = VqGradients::zeros(model);
  const BatchResult batch = vqvae_gradients(model, windows, grads);
  check_finite_term(batch.loss.reconstruction, "reconstruction");
  check_finite_term(batch.loss.codebook, "codebook");
  check_finite_term(batch.loss.commitment, "commitment");
  apply_gradients(model, state, grads);

  Codebook& cb = model.codebook;
  TokenSequence all;
  for (const auto& t : batch.tokens) all.insert(all.end(), t.begin(), t.end());
  if (model.config.ema_codebook) ema_update(cb, batch.encoder_outputs, all, model.config.ema_decay);

  std::vector<bool> used(static_cast<std::size_t>(cb.size()), false);
  for (int t : all) {
    used[static_cast<std::size_t>(t)] = true;
    ++cb.usage_counts[static_cast<std::size_t>(t)];
  }
  StepReport report;
  report.loss = batch.loss;
  report.perplexity = perplexity(all, cb.size());
  Rng rng = Rng::substream(seed, "dead-code");
  for (int k = 0; k < cb.size(); ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (used[uk]) {
      cb.idle_steps[uk] = 0;
      ++report.active_codes;
      continue;
    }
    if (++cb.idle_steps[uk] < static_cast<std::uint32_t>(model.config.dead_code_steps)) continue;
    cb.entries.row(k) = batch.encoder_outputs.row(static_cast<Eigen::Index>(rng.index(std::size_t(batch.encoder_outputs.rows()))));
    state.codebook.row(k).setZero();
    if (cb.ema_counts.size() == cb.size()) {
      cb.ema_counts(k) = 1.0;
      cb.ema_sums.row(k) = cb.entries.row(k);
    }
    cb.idle_steps[uk] = 0;
    ++report.reinitialized;
  }
  return report;
}

std::vector<StepReport> train_vq(VqModel& model, OptimizerState& state, std::span<const Matrix> windows,
                                 const TrainOptions& options, const StepCallback& on_step) {
  require(!windows.empty(), ErrorCode::kInvalidInput, "no training windows");
  require(options.steps >= 0 && options.batch_size > 0, ErrorCode::kConfig, "invalid training options");
  Rng rng = Rng::substream(options.seed, "minibatch");
  std::vector<StepReport> history;
  history.reserve(static_cast<std::size_t>(options.steps));
  std::vector<Matrix> batch;
  for (int step = 0; step < options.steps; ++step) {
    batch.clear();
    if (windows.size() <= static_cast<std::size_t>(options.batch_size)) {
      batch.assign(windows.begin(), windows.end());
    } else {
      for (int b = 0; b < options.batch_size; ++b) batch.push_back(windows[rng.index(windows.size())]);
    }
    history.push_back(train_step(model, state, batch, splitmix64(options.seed + std::uint64_t(step))));
    if (on_step) on_step(step, history.back());
  }
  return history;
}

void save_vq_model(const VqModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const VqConfig& c = model.config;
  const nlohmann::json meta = {{"input_dim", c.input_dim},         {"hidden", c.hidden},
                               {"latent_dim", c.latent_dim},       {"codebook_size", c.codebook_size},
                               {"window", c.window},               {"beta_commit", c.beta_commit},
                               {"learning_rate", c.learning_rate}, {"optimizer", optimizer_name(c.optimizer)},
                               {"ema_codebook", c.ema_codebook},   {"ema_decay", c.ema_decay},
                               {"dead_code_steps", c.dead_code_steps}};
  std::ofstream(dir / "vq.json") << meta.dump(2) << '\n';
  std::ofstream enc(dir / "encoder.tnet", std::ios::binary);
  write_tinynet(enc, model.encoder);
  std::ofstream dec(dir / "decoder.tnet", std::ios::binary);
  write_tinynet(dec, model.decoder);
  std::ofstream cb(dir / "codebook.vqcb", std::ios::binary);
  write_codebook(cb, model.codebook);
  require(enc.good() && dec.good() && cb.good(), ErrorCode::kIo, "failed writing model to " + dir.string());
}

VqModel load_vq_model(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "vq.json");
  require(meta_in.good(), ErrorCode::kIo, "cannot read " + (dir / "vq.json").string());
  VqModel m;
  try {
    const auto j = nlohmann::json::parse(meta_in);
    VqConfig& c = m.config;
    c.input_dim = j.at("input_dim");
    c.hidden = j.at("hidden");
    c.latent_dim = j.at("latent_dim");
    c.codebook_size = j.at("codebook_size");
    c.window = j.at("window");
    c.beta_commit = j.at("beta_commit");
    c.learning_rate = j.at("learning_rate");
    c.optimizer = parse_optimizer(j.at("optimizer"));
    c.ema_codebook = j.at("ema_codebook");
    c.ema_decay = j.at("ema_decay");
    c.dead_code_steps = j.at("dead_code_steps");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, "vq.json: " + std::string(e.what()));
  }
  m.config.validate();
  std::ifstream enc(dir / "encoder.tnet", std::ios::binary);
  std::ifstream dec(dir / "decoder.tnet", std::ios::binary);
  std::ifstream cb(dir / "codebook.vqcb", std::ios::binary);
  require(enc.good() && dec.good() && cb.good(), ErrorCode::kIo, "missing model files in " + dir.string());
  m.encoder = read_tinynet(enc);
  m.decoder = read_tinynet(dec);
  m.codebook = read_codebook(cb);
  require(m.encoder.input_channels() == m.config.input_dim && m.decoder.output_channels() == m.config.input_dim &&
              m.codebook.dim() == m.config.latent_dim && m.codebook.size() == m.config.codebook_size,
          ErrorCode::kModelContract, "model files disagree with vq.json");
  return m;
}

}  // namespace oad
