#pragma once

#include <functional>

#include "oad/vqcodec/vqvae.hpp"
#include "oad/core/rng.hpp"

namespace oad::testing {

/// Direct-loop convolution, independent of the im2col implementation.
inline Matrix naive_conv(const Conv1d& c, const Matrix& x) {
  const Eigen::Index t_out = (x.rows() + 2 * c.padding - c.kernel) / c.stride + 1;
  Matrix y(t_out, c.out_channels);
  for (Eigen::Index o = 0; o < t_out; ++o)
    for (int co = 0; co < c.out_channels; ++co) {
      double acc = c.bias(0, co);
      for (int kk = 0; kk < c.kernel; ++kk) {
        const Eigen::Index t = o * c.stride - c.padding + kk;
        if (t < 0 || t >= x.rows()) continue;
        for (int ci = 0; ci < c.in_channels; ++ci) acc += c.weight(co, kk * c.in_channels + ci) * x(t, ci);
      }
      y(o, co) = acc;
    }
  return y;
}

inline Matrix naive_forward(const TinyNet& net, const Matrix& x) {
  Matrix h = x;
  for (const Layer& layer : net.layers()) {
    if (const auto* c = std::get_if<Conv1d>(&layer)) {
      h = naive_conv(*c, h);
    } else if (std::holds_alternative<Relu>(layer)) {
      for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = h(i) > 0.0 ? h(i) : 0.0;
    } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
      Matrix a = naive_conv(r->conv_a, h);
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = a(i) > 0.0 ? a(i) : 0.0;
      h = h + naive_conv(r->conv_b, a);
    } else {
      const int f = std::get<Upsample>(layer).factor;
      Matrix u(h.rows() * f, h.cols());
      for (Eigen::Index t = 0; t < u.rows(); ++t) u.row(t) = h.row(t / f);
      h = u;
    }
  }
  return h;
}

/// Loss with every stop-gradient frozen at a base point: tokens, the
/// straight-through offset (z_q - z_enc) and both sides of the quadratic
/// terms. Its exact derivatives are what the analytic routing claims.
class FrozenVqObjective {
 public:
  FrozenVqObjective(const VqModel& base, std::vector<Matrix> windows) : windows_(std::move(windows)) {
    for (const Matrix& w : windows_) {
      const Matrix z = base.encoder.forward(w);
      const Quantized q = quantize(z, base.codebook);
      tokens_.push_back(q.tokens);
      z_enc_.push_back(z);
      z_q_.push_back(q.latents);
    }
  }

  double operator()(const VqModel& m, const LossMask& mask) const {
    double total = 0.0;
    for (std::size_t i = 0; i < windows_.size(); ++i) {
      const Matrix z = m.encoder.forward(windows_[i]);
      const Matrix zq = lookup(m.codebook, tokens_[i]);
      const Matrix m_hat = m.decoder.forward(z + (z_q_[i] - z_enc_[i])).topRows(windows_[i].rows());
      double f = 0.0;
      if (mask.reconstruction) f += (m_hat - windows_[i]).cwiseAbs().sum() / double(windows_[i].size());
      if (mask.codebook) f += (z_enc_[i] - zq).cwiseAbs2().sum() / double(zq.size());
      if (mask.commitment) f += m.config.beta_commit * (z - z_q_[i]).cwiseAbs2().sum() / double(z.size());
      total += f;
    }
    return total / double(windows_.size());
  }

 private:
  std::vector<Matrix> windows_;
  std::vector<TokenSequence> tokens_;
  std::vector<Matrix> z_enc_;
  std::vector<Matrix> z_q_;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
}

/// Central difference of f with respect to one scalar slot.
inline double central_difference(double& slot, const std::function<double()>& f, double eps = 1e-5) {
  const double saved = slot;
  slot = saved + eps;
  const double plus = f();
  slot = saved - eps;
  const double minus = f();
  slot = saved;
  return (plus - minus) / (2.0 * eps);
}

struct VqProbe {
  int group;  // 0 encoder, 1 decoder, 2 codebook
  std::size_t tensor;
  Eigen::Index index;
};

inline std::vector<VqProbe> random_probes(Rng& rng, VqModel& m, int count) {
  std::vector<VqProbe> probes;
  const auto enc = m.encoder.parameters();
  const auto dec = m.decoder.parameters();
  for (int i = 0; i < count; ++i) {
    const int group = static_cast<int>(rng.index(3));
    if (group == 2) {
      probes.push_back({2, 0, static_cast<Eigen::Index>(rng.index(std::size_t(m.codebook.entries.size())))});
      continue;
    }
    const auto& params = group == 0 ? enc : dec;
    const std::size_t t = rng.index(params.size());
    probes.push_back({group, t, static_cast<Eigen::Index>(rng.index(std::size_t(params[t]->size())))});
  }
  return probes;
}

inline double& probe_slot(VqModel& m, const VqProbe& p) {
  if (p.group == 2) return m.codebook.entries(p.index);
  return (*(p.group == 0 ? m.encoder.parameters() : m.decoder.parameters())[p.tensor])(p.index);
}

inline double probe_grad(const VqGradients& g, const VqProbe& p) {
  if (p.group == 2) return g.codebook(p.index);
  return (p.group == 0 ? g.encoder : g.decoder)[p.tensor](p.index);
}

/// Small model and windows whose codebook holds only entries near the
/// encoder outputs, so the frozen tokens match argmin at the base point.
inline VqModel small_vq_model(Rng& rng, int dp, int window, int codebook_size, std::vector<Matrix>& windows) {
  VqConfig c;
  c.input_dim = dp;
  c.hidden = 5;
  c.latent_dim = 3;
  c.codebook_size = codebook_size;
  c.window = window;
  windows.clear();
  for (int i = 0; i < 4; ++i) {
    Matrix w(window, dp);
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = rng.normal();
    windows.push_back(w);
  }
  VqModel m = make_vq_model(c, windows, rng.next_u64());
  // Random biases so ReLU patterns and zero-bias symmetry are exercised.
  for (Matrix* p : m.encoder.parameters())
    if (p->rows() == 1)
      for (Eigen::Index k = 0; k < p->size(); ++k) (*p)(k) = rng.normal(0.0, 0.1);
  for (Matrix* p : m.decoder.parameters())
    if (p->rows() == 1)
      for (Eigen::Index k = 0; k < p->size(); ++k) (*p)(k) = rng.normal(0.0, 0.1);
  for (Eigen::Index k = 0; k < m.codebook.entries.size(); ++k) m.codebook.entries(k) += rng.normal(0.0, 0.05);
  return m;
}

}  // namespace oad::testing
