#include <filesystem>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "support/generators.hpp"
#include "support/vq_oracle.hpp"

using namespace oad;
using namespace oad::testing;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

void randomize(TinyNet& net, Rng& rng) {
  for (Matrix* p : net.parameters())
    for (Eigen::Index i = 0; i < p->size(); ++i) (*p)(i) = rng.normal(0.0, 0.5);
}

/// Checks every input and parameter derivative of f(x) = <r, net(x)>.
double layer_gradient_error(TinyNet net, Matrix x, Rng& rng) {
  const Matrix r = random_matrix(rng, net.output_length(x.rows()), net.output_channels());
  Tape tape;
  net.forward_train(x, tape);
  std::vector<Matrix> grads = net.zero_gradients();
  const Matrix gx = net.backward(r, tape, grads);
  auto f = [&] { return (net.forward(x).array() * r.array()).sum(); };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) worst = std::max(worst, relative_error(gx(i), central_difference(x(i), f)));
  auto params = net.parameters();
  for (std::size_t p = 0; p < params.size(); ++p)
    for (Eigen::Index i = 0; i < params[p]->size(); ++i)
      worst = std::max(worst, relative_error(grads[p](i), central_difference((*params[p])(i), f)));
  return worst;
}

}  // namespace

TEST_CASE("convolution matches a direct-loop oracle") {
  Rng rng(10);
  for (auto [k, s, p] : {std::tuple{3, 2, 1}, {3, 1, 1}, {1, 1, 0}, {5, 3, 2}, {2, 2, 0}}) {
    TinyNet net({Conv1d::make(4, 6, k, s, p)});
    randomize(net, rng);
    const Matrix x = random_matrix(rng, 13, 4);
    const Matrix y = net.forward(x);
    CHECK(y.rows() == net.output_length(13));
    CHECK((y - naive_forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("encoder and decoder forward passes") {
  Rng rng(11);
  TinyNet enc = make_encoder(7, 8, 4);
  TinyNet dec = make_decoder(4, 8, 7);
  enc.initialize(rng);
  dec.initialize(rng);
  SUBCASE("zero input with zero bias stays zero") {
    CHECK(encode(enc, Matrix::Zero(32, 7)).isZero(0.0));
    CHECK(decode(dec, Matrix::Zero(8, 4), 32).isZero(0.0));
  }
  SUBCASE("temporal lengths") {
    CHECK(encode(enc, Matrix::Zero(32, 7)).rows() == 8);
    CHECK(encode(enc, Matrix::Zero(30, 7)).rows() == 8);
    CHECK(decode(dec, Matrix::Zero(8, 4), 30).rows() == 30);
  }
  SUBCASE("agreement with the independent forward pass") {
    randomize(enc, rng);
    randomize(dec, rng);
    const Matrix x = random_matrix(rng, 32, 7);
    const Matrix z = encode(enc, x);
    CHECK((z - naive_forward(enc, x)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((decode(dec, z, 32) - naive_forward(dec, z)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("shape errors") {
    CHECK(thrown_code([&] { encode(enc, Matrix::Zero(32, 6)); }) == ErrorCode::kDimension);
    CHECK(thrown_code([&] { decode(dec, Matrix::Zero(8, 4), 40); }) == ErrorCode::kDimension);
  }
}

TEST_CASE("identity networks give a lossless path") {
  TinyNet id({Conv1d::make(3, 3, 1, 1, 0)});
  std::get<Conv1d>(id.layers()[0]).weight = Matrix::Identity(3, 3);
  Rng rng(12);
  const Matrix x = random_matrix(rng, 9, 3);
  const Matrix z = encode(id, x);
  CHECK(z == x);
  Codebook cb(z);
  const Quantized q = quantize(z, cb);
  CHECK(decode(id, q.latents, 9) == x);
}

TEST_CASE("per-layer gradients match central differences") {
  Rng rng(13);
  SUBCASE("conv stride 2") {
    TinyNet net({Conv1d::make(3, 4, 3, 2, 1)});
    randomize(net, rng);
    CHECK(layer_gradient_error(net, random_matrix(rng, 9, 3), rng) < 1e-4);
  }
  SUBCASE("conv pointwise") {
    TinyNet net({Conv1d::make(3, 2, 1, 1, 0)});
    randomize(net, rng);
    CHECK(layer_gradient_error(net, random_matrix(rng, 6, 3), rng) < 1e-4);
  }
  SUBCASE("relu") {
    TinyNet net({Conv1d::make(3, 3, 1, 1, 0), Relu{}});
    randomize(net, rng);
    CHECK(layer_gradient_error(net, random_matrix(rng, 8, 3), rng) < 1e-4);
  }
  SUBCASE("residual block") {
    TinyNet net({ResidualBlock::make(4)});
    randomize(net, rng);
    CHECK(layer_gradient_error(net, random_matrix(rng, 7, 4), rng) < 1e-4);
  }
  SUBCASE("upsample") {
    TinyNet net({Conv1d::make(2, 3, 1, 1, 0), Upsample{2}});
    randomize(net, rng);
    CHECK(layer_gradient_error(net, random_matrix(rng, 5, 2), rng) < 1e-4);
  }
  SUBCASE("full encoder") {
    TinyNet net = make_encoder(3, 4, 2);
    randomize(net, rng);
    CHECK(layer_gradient_error(net, random_matrix(rng, 12, 3), rng) < 1e-4);
  }
}

TEST_CASE("quantize") {
  SUBCASE("nearest by inspection") {
    Matrix e(2, 2);
    e << 0, 0, 1, 1;
    Matrix z(1, 2);
    z << 0.2, 0.1;
    CHECK(quantize(z, Codebook(e)).tokens == TokenSequence{0});
  }
  SUBCASE("ties go to the lowest index") {
    Matrix e = Matrix::Constant(8, 2, 100.0);
    e.row(3) << 1, 0;
    e.row(7) << -1, 0;
    const Quantized q = quantize(Matrix::Zero(1, 2), Codebook(e));
    CHECK(q.tokens == TokenSequence{3});
    CHECK(q.latents == e.row(3));
  }
  SUBCASE("brute-force oracle and idempotence") {
    Rng rng(14);
    const Codebook cb(random_matrix(rng, 1024, 8));
    const Matrix z = random_matrix(rng, 64, 8);
    const Quantized q = quantize(z, cb);
    for (Eigen::Index t = 0; t < z.rows(); ++t) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < 1024; ++k) {
        double d = 0.0;
        for (Eigen::Index c = 0; c < 8; ++c) d += (z(t, c) - cb.entries(k, c)) * (z(t, c) - cb.entries(k, c));
        if (d < best_d) {
          best_d = d;
          best = int(k);
        }
      }
      CHECK(q.tokens[std::size_t(t)] == best);
    }
    CHECK(quantize(q.latents, cb).tokens == q.tokens);
  }
  SUBCASE("errors") {
    CHECK(thrown_code([] { quantize(Matrix::Zero(2, 3), Codebook(Matrix::Ones(4, 2))); }) == ErrorCode::kDimension);
    CHECK(thrown_code([] { quantize(Matrix::Zero(2, 3), Codebook()); }) == ErrorCode::kInvalidState);
  }
}

TEST_CASE("vqvae loss values") {
  Rng rng(15);
  const Matrix m = random_matrix(rng, 32, 5);
  const Matrix z_q = random_matrix(rng, 8, 4);
  const LossTerms zero = vqvae_loss(m, m, z_q, z_q, 0.25);
  CHECK(zero.total == 0.0);

  Matrix z_enc = z_q;
  z_enc(3, 0) += 1.0;
  const LossTerms l = vqvae_loss(m, m, z_enc, z_q, 0.25);
  CHECK(std::abs(l.total - 1.25 / 32.0) < 1e-10);
  CHECK(std::abs(l.codebook - 1.0 / 32.0) < 1e-15);
  CHECK(std::abs(l.commitment - 0.25 / 32.0) < 1e-15);

  const Matrix m_hat = random_matrix(rng, 32, 5);
  const LossTerms r = vqvae_loss(m, m_hat, random_matrix(rng, 8, 4), z_q, 0.4);
  CHECK(std::abs(r.total - (r.reconstruction + r.codebook + r.commitment)) < 1e-12);
  double l1 = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) l1 += std::abs(m_hat(i) - m(i));
  CHECK(std::abs(r.reconstruction - l1 / 160.0) < 1e-12);
  CHECK(thrown_code([&] { vqvae_loss(m, z_q, z_q, z_q, 0.25); }) == ErrorCode::kDimension);
}

TEST_CASE("full loss gradient against the frozen stop-gradient objective") {
  Rng rng(16);
  std::vector<Matrix> windows;
  VqModel model = small_vq_model(rng, 4, 16, 6, windows);
  const std::vector<Matrix> batch(windows.begin(), windows.begin() + 2);
  const FrozenVqObjective objective(model, batch);
  for (const LossMask mask : {LossMask{}, LossMask{true, false, false}, LossMask{false, true, false},
                              LossMask{false, false, true}}) {
    VqGradients g = VqGradients::zeros(model);
    const BatchResult res = vqvae_gradients(model, batch, g, mask);
    CHECK(std::abs(objective(model, LossMask{}) - res.loss.total) < 1e-12);
    double worst = 0.0;
    for (const VqProbe& p : random_probes(rng, model, 200)) {
      const double numeric = central_difference(probe_slot(model, p), [&] { return objective(model, mask); });
      worst = std::max(worst, relative_error(probe_grad(g, p), numeric));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("each term only reaches its own parameters") {
  Rng rng(17);
  std::vector<Matrix> windows;
  const VqModel model = small_vq_model(rng, 3, 8, 5, windows);
  auto all_zero = [](const std::vector<Matrix>& gs) {
    for (const Matrix& g : gs)
      if (!g.isZero(0.0)) return false;
    return true;
  };
  VqGradients cb = VqGradients::zeros(model);
  vqvae_gradients(model, windows, cb, {false, true, false});
  CHECK(all_zero(cb.encoder));
  CHECK(all_zero(cb.decoder));
  CHECK_FALSE(cb.codebook.isZero(0.0));

  VqGradients commit = VqGradients::zeros(model);
  vqvae_gradients(model, windows, commit, {false, false, true});
  CHECK_FALSE(all_zero(commit.encoder));
  CHECK(all_zero(commit.decoder));
  CHECK(commit.codebook.isZero(0.0));

  VqGradients recon = VqGradients::zeros(model);
  vqvae_gradients(model, windows, recon, {true, false, false});
  CHECK_FALSE(all_zero(recon.encoder));
  CHECK_FALSE(all_zero(recon.decoder));
  CHECK(recon.codebook.isZero(0.0));
}

TEST_CASE("straight-through with identity quantizer equals a plain autoencoder") {
  Rng rng(18);
  std::vector<Matrix> windows;
  const VqModel model = small_vq_model(rng, 3, 12, 4, windows);
  VqGradients st = VqGradients::zeros(model);
  vqvae_gradients(model, windows, st, {}, true);

  std::vector<Matrix> enc = model.encoder.zero_gradients();
  std::vector<Matrix> dec = model.decoder.zero_gradients();
  for (const Matrix& w : windows) {
    Tape te, td;
    const Matrix z = model.encoder.forward_train(w, te);
    const Matrix out = model.decoder.forward_train(z, td);
    Matrix g = Matrix::Zero(out.rows(), out.cols());
    for (Eigen::Index t = 0; t < w.rows(); ++t)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double d = out(t, c) - w(t, c);
        g(t, c) = (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / double(w.size() * windows.size());
      }
    model.encoder.backward(model.decoder.backward(g, td, dec), te, enc);
  }
  for (std::size_t i = 0; i < enc.size(); ++i) CHECK((enc[i] - st.encoder[i]).cwiseAbs().maxCoeff() < 1e-10);
  for (std::size_t i = 0; i < dec.size(); ++i) CHECK((dec[i] - st.decoder[i]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("training step mechanics") {
  Rng rng(19);
  std::vector<Matrix> windows;
  SUBCASE("learning rate 0 leaves parameters bit-identical") {
    VqModel model = small_vq_model(rng, 3, 8, 5, windows);
    model.config.learning_rate = 0.0;
    const VqModel before = model;
    OptimizerState state = OptimizerState::for_model(model);
    for (int s = 0; s < 5; ++s) train_step(model, state, windows, std::uint64_t(s));
    CHECK(model.encoder == before.encoder);
    CHECK(model.decoder == before.decoder);
    CHECK(model.codebook.entries == before.codebook.entries);
  }
  SUBCASE("deterministic for a seed") {
    VqModel a = small_vq_model(rng, 3, 8, 5, windows);
    VqModel b = a;
    OptimizerState sa = OptimizerState::for_model(a), sb = OptimizerState::for_model(b);
    const auto ha = train_vq(a, sa, windows, {20, 2, 5});
    const auto hb = train_vq(b, sb, windows, {20, 2, 5});
    CHECK(ha.back().loss.total == hb.back().loss.total);
    CHECK(a.encoder == b.encoder);
  }
  SUBCASE("usage counts and dead-code reinitialization") {
    VqModel model = small_vq_model(rng, 3, 8, 5, windows);
    model.config.dead_code_steps = 1;
    model.codebook.entries.row(4).setConstant(1e3);
    OptimizerState state = OptimizerState::for_model(model);
    const StepReport r = train_step(model, state, windows, 3);
    CHECK(r.reinitialized >= 1);
    CHECK(model.codebook.entries.row(4).cwiseAbs().maxCoeff() < 1e2);
    std::uint64_t used = 0;
    for (auto c : model.codebook.usage_counts) used += c;
    CHECK(used == 4 * 2);
  }
  SUBCASE("EMA update pulls entries toward assigned latents") {
    VqModel model = small_vq_model(rng, 3, 8, 5, windows);
    model.config.ema_codebook = true;
    model.config.learning_rate = 0.0;
    const Matrix before = model.codebook.entries;
    OptimizerState state = OptimizerState::for_model(model);
    train_step(model, state, windows, 1);
    CHECK(model.codebook.entries != before);
  }
  SUBCASE("non-finite loss names the term") {
    VqModel model = small_vq_model(rng, 3, 8, 5, windows);
    (*model.decoder.parameters().back())(0) = std::numeric_limits<double>::quiet_NaN();
    OptimizerState state = OptimizerState::for_model(model);
    try {
      train_step(model, state, windows, 0);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDivergence);
      CHECK(std::string(e.what()).find("reconstruction") != std::string::npos);
    }
  }
}

TEST_CASE("codebook initialization") {
  Matrix samples(100, 2);
  samples.topRows(50).setZero();
  samples.bottomRows(50).setConstant(10.0);
  const Codebook km = init_codebook(samples, 2, CodebookInit::kKMeans, 3);
  const double d0 = std::min(km.entries.row(0).norm(), km.entries.row(1).norm());
  const double d1 = std::min((km.entries.row(0).array() - 10.0).matrix().norm(),
                             (km.entries.row(1).array() - 10.0).matrix().norm());
  CHECK(d0 < 1e-6);
  CHECK(d1 < 1e-6);

  Rng rng(20);
  const Matrix pool = random_matrix(rng, 50, 3);
  const Codebook a = init_codebook(pool, 16, CodebookInit::kSample, 9);
  CHECK(a.entries == init_codebook(pool, 16, CodebookInit::kSample, 9).entries);
  CHECK(a.entries != init_codebook(pool, 16, CodebookInit::kSample, 10).entries);
  for (int i = 0; i < 16; ++i)
    for (int j = i + 1; j < 16; ++j) CHECK((a.entries.row(i) - a.entries.row(j)).norm() > 1e-12);
  CHECK(thrown_code([&] { init_codebook(pool, 64, CodebookInit::kSample, 1); }) == ErrorCode::kInvalidInput);
  CHECK(thrown_code([&] { init_codebook(samples.topRows(50), 2, CodebookInit::kSample, 1); }) ==
        ErrorCode::kInvalidInput);
  CHECK(thrown_code([] { parse_codebook_init("random"); }) == ErrorCode::kConfig);
}

TEST_CASE("perplexity") {
  CHECK(perplexity({1, 1, 1, 1}, 4) == doctest::Approx(1.0));
  CHECK(perplexity({0, 1, 2, 3}, 4) == doctest::Approx(4.0));
  CHECK(perplexity({0, 0, 1, 1}, 4) == doctest::Approx(2.0));
}

TEST_CASE("binary containers round trip") {
  Rng rng(21);
  std::vector<Matrix> windows;
  const VqModel model = small_vq_model(rng, 3, 8, 5, windows);
  std::stringstream net_buf, cb_buf;
  write_tinynet(net_buf, model.decoder);
  CHECK(read_tinynet(net_buf) == model.decoder);
  write_codebook(cb_buf, model.codebook);
  const std::string bytes = cb_buf.str();
  CHECK(bytes.substr(0, 4) == "VQCB");
  CHECK(bytes.size() == 16 + 8 * 5 * 3);
  CHECK(read_codebook(cb_buf).entries == model.codebook.entries);
  std::stringstream bad("TNEX....");
  CHECK(thrown_code([&] { read_tinynet(bad); }) == ErrorCode::kParse);

  const auto dir = std::filesystem::temp_directory_path() / "oad_vq_roundtrip";
  save_vq_model(model, dir);
  const VqModel back = load_vq_model(dir);
  CHECK(back.encoder == model.encoder);
  CHECK(back.codebook.entries == model.codebook.entries);
  CHECK(back.config.window == 8);
  std::filesystem::remove_all(dir);
}
