#include "oad/vqcodec/tinynet.hpp"

#include <cmath>

#include "oad/core/binary_io.hpp"
#include "oad/core/error.hpp"

namespace oad {

namespace {

constexpr std::uint32_t kTinyNetVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Matrix im2col(const Conv1d& conv, const Matrix& x) {
  const Eigen::Index t_out = conv.output_length(x.rows());
  const Eigen::Index c = conv.in_channels;
  Matrix patches = Matrix::Zero(t_out, conv.kernel * c);
  for (Eigen::Index o = 0; o < t_out; ++o) {
    for (int kk = 0; kk < conv.kernel; ++kk) {
      const Eigen::Index t = o * conv.stride - conv.padding + kk;
      if (t < 0 || t >= x.rows()) continue;
      patches.block(o, kk * c, 1, c) = x.row(t);
    }
  }
  return patches;
}

Matrix col2im(const Conv1d& conv, const Matrix& grad_patches, Eigen::Index input_length) {
  const Eigen::Index c = conv.in_channels;
  Matrix grad = Matrix::Zero(input_length, c);
  for (Eigen::Index o = 0; o < grad_patches.rows(); ++o) {
    for (int kk = 0; kk < conv.kernel; ++kk) {
      const Eigen::Index t = o * conv.stride - conv.padding + kk;
      if (t < 0 || t >= input_length) continue;
      grad.row(t) += grad_patches.block(o, kk * c, 1, c);
    }
  }
  return grad;
}

Matrix conv_forward(const Conv1d& conv, const Matrix& x, Matrix* patches_out) {
  require(x.cols() == conv.in_channels, ErrorCode::kDimension,
          "conv expects " + std::to_string(conv.in_channels) + " channels, got " + std::to_string(x.cols()));
  require(conv.output_length(x.rows()) >= 1, ErrorCode::kDimension, "input too short for convolution");
  Matrix patches = im2col(conv, x);
  Matrix y = patches * conv.weight.transpose();
  y.rowwise() += conv.bias.row(0);
  if (patches_out) *patches_out = std::move(patches);
  return y;
}

Matrix conv_backward(const Conv1d& conv, const Matrix& grad_y, const Matrix& patches, Eigen::Index input_length,
                     Matrix& grad_w, Matrix& grad_b) {
  grad_w.noalias() += grad_y.transpose() * patches;
  grad_b += grad_y.colwise().sum();
  return col2im(conv, grad_y * conv.weight, input_length);
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_grad(const Matrix& x, const Matrix& g) { return (x.array() > 0.0).select(g, 0.0); }

void init_conv(Conv1d& conv, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(conv.kernel * conv.in_channels));
  for (Eigen::Index i = 0; i < conv.weight.size(); ++i) conv.weight(i) = rng.uniform(-bound, bound);
  conv.bias.setZero();
}

void write_conv(std::ostream& out, const Conv1d& c) {
  for (int v : {c.in_channels, c.out_channels, c.kernel, c.stride, c.padding})
    binio::write_u32(out, static_cast<std::uint32_t>(v));
}

Conv1d read_conv(std::istream& in) {
  int v[5];
  for (int& x : v) {
    x = static_cast<int>(binio::read_u32(in));
    require(x >= 0 && x < (1 << 20), ErrorCode::kParse, "implausible convolution shape in TNET file");
  }
  require(v[0] > 0 && v[1] > 0 && v[2] > 0 && v[3] > 0, ErrorCode::kParse, "zero convolution shape in TNET file");
  return Conv1d::make(v[0], v[1], v[2], v[3], v[4]);
}

}  // namespace

Conv1d Conv1d::make(int in_channels, int out_channels, int kernel, int stride, int padding) {
  require(in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0 && padding >= 0, ErrorCode::kInvalidInput,
          "invalid convolution shape");
  Conv1d c;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.kernel = kernel;
  c.stride = stride;
  c.padding = padding;
  c.weight = Matrix::Zero(out_channels, kernel * in_channels);
  c.bias = Matrix::Zero(1, out_channels);
  return c;
}

Eigen::Index Conv1d::output_length(Eigen::Index input_length) const {
  const Eigen::Index span = input_length + 2 * padding - kernel;
  return span < 0 ? 0 : span / stride + 1;
}

ResidualBlock ResidualBlock::make(int channels, int kernel) {
  require(kernel % 2 == 1, ErrorCode::kInvalidInput, "residual block kernel must be odd");
  return {Conv1d::make(channels, channels, kernel, 1, kernel / 2), Conv1d::make(channels, channels, kernel, 1, kernel / 2)};
}

TinyNet::TinyNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), ErrorCode::kInvalidInput, "network has no layers");
  int channels = -1;
  for (const Layer& layer : layers_) {
    std::visit(Overloaded{[&](const Conv1d& c) {
                            require(channels < 0 || channels == c.in_channels, ErrorCode::kDimension,
                                    "convolution input width does not match previous layer");
                            channels = c.out_channels;
                          },
                          [&](const ResidualBlock& r) {
                            require(channels < 0 || channels == r.conv_a.in_channels, ErrorCode::kDimension,
                                    "residual block width does not match previous layer");
                            channels = r.conv_a.in_channels;
                          },
                          [&](const Upsample& u) {
                            require(u.factor >= 1, ErrorCode::kInvalidInput, "upsample factor must be positive");
                          },
                          [](const Relu&) {}},
               layer);
  }
  require(input_channels() > 0, ErrorCode::kInvalidInput, "network needs a convolution to fix its width");
}

int TinyNet::input_channels() const {
  for (const Layer& layer : layers_) {
    if (const auto* c = std::get_if<Conv1d>(&layer)) return c->in_channels;
    if (const auto* r = std::get_if<ResidualBlock>(&layer)) return r->conv_a.in_channels;
  }
  return 0;
}

int TinyNet::output_channels() const {
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (const auto* c = std::get_if<Conv1d>(&*it)) return c->out_channels;
    if (const auto* r = std::get_if<ResidualBlock>(&*it)) return r->conv_b.out_channels;
  }
  return 0;
}

Eigen::Index TinyNet::output_length(Eigen::Index length) const {
  for (const Layer& layer : layers_) {
    std::visit(Overloaded{[&](const Conv1d& c) { length = c.output_length(length); },
                          [&](const Upsample& u) { length *= u.factor; }, [](const auto&) {}},
               layer);
  }
  return length;
}

Matrix TinyNet::forward(const Matrix& x) const {
  Tape scratch;
  return forward_train(x, scratch);
}

Matrix TinyNet::forward_train(const Matrix& x, Tape& tape) const {
  require(x.cols() == input_channels(), ErrorCode::kDimension,
          "network expects " + std::to_string(input_channels()) + " channels, got " + std::to_string(x.cols()));
  tape.layers.assign(layers_.size(), {});
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    LayerCache& cache = tape.layers[i];
    cache.input_length = h.rows();
    h = std::visit(Overloaded{[&](const Conv1d& c) { return conv_forward(c, h, &cache.a); },
                              [&](const Relu&) {
                                cache.a = h;
                                return relu(h);
                              },
                              [&](const ResidualBlock& r) {
                                cache.b = conv_forward(r.conv_a, h, &cache.a);
                                Matrix inner = conv_forward(r.conv_b, relu(cache.b), &cache.c);
                                return Matrix(h + inner);
                              },
                              [&](const Upsample& u) {
                                Matrix y(h.rows() * u.factor, h.cols());
                                for (Eigen::Index t = 0; t < y.rows(); ++t) y.row(t) = h.row(t / u.factor);
                                return y;
                              }},
                   layers_[i]);
  }
  return h;
}

Matrix TinyNet::backward(const Matrix& grad_output, const Tape& tape, std::vector<Matrix>& grads) const {
  require(tape.layers.size() == layers_.size(), ErrorCode::kInvalidState, "tape does not match network");
  require(grads.size() == parameter_count(), ErrorCode::kDimension, "gradient list does not match parameters");
  std::vector<std::size_t> first_param(layers_.size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    first_param[i] = p;
    if (std::holds_alternative<Conv1d>(layers_[i])) p += 2;
    if (std::holds_alternative<ResidualBlock>(layers_[i])) p += 4;
  }
  Matrix g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const LayerCache& cache = tape.layers[i];
    const std::size_t q = first_param[i];
    g = std::visit(Overloaded{[&](const Conv1d& c) {
                                return conv_backward(c, g, cache.a, cache.input_length, grads[q], grads[q + 1]);
                              },
                              [&](const Relu&) { return relu_grad(cache.a, g); },
                              [&](const ResidualBlock& r) {
                                Matrix inner = conv_backward(r.conv_b, g, cache.c, cache.input_length, grads[q + 2],
                                                             grads[q + 3]);
                                inner = relu_grad(cache.b, inner);
                                return Matrix(g + conv_backward(r.conv_a, inner, cache.a, cache.input_length,
                                                                grads[q], grads[q + 1]));
                              },
                              [&](const Upsample& u) {
                                Matrix d = Matrix::Zero(cache.input_length, g.cols());
                                for (Eigen::Index t = 0; t < g.rows(); ++t) d.row(t / u.factor) += g.row(t);
                                return d;
                              }},
                   layers_[i]);
  }
  return g;
}

std::vector<Matrix*> TinyNet::parameters() {
  std::vector<Matrix*> out;
  for (Layer& layer : layers_) {
    if (auto* c = std::get_if<Conv1d>(&layer)) out.insert(out.end(), {&c->weight, &c->bias});
    if (auto* r = std::get_if<ResidualBlock>(&layer))
      out.insert(out.end(), {&r->conv_a.weight, &r->conv_a.bias, &r->conv_b.weight, &r->conv_b.bias});
  }
  return out;
}

std::vector<const Matrix*> TinyNet::parameters() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<TinyNet*>(this)->parameters()) out.push_back(m);
  return out;
}

std::vector<Matrix> TinyNet::zero_gradients() const {
  std::vector<Matrix> out;
  for (const Matrix* m : parameters()) out.push_back(Matrix::Zero(m->rows(), m->cols()));
  return out;
}

std::size_t TinyNet::parameter_count() const { return parameters().size(); }

void TinyNet::initialize(Rng& rng) {
  for (Layer& layer : layers_) {
    if (auto* c = std::get_if<Conv1d>(&layer)) init_conv(*c, rng);
    if (auto* r = std::get_if<ResidualBlock>(&layer)) {
      init_conv(r->conv_a, rng);
      init_conv(r->conv_b, rng);
    }
  }
}

bool operator==(const TinyNet& a, const TinyNet& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i)
    if (a.layers_[i].index() != b.layers_[i].index()) return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->rows() != pb[i]->rows() || pa[i]->cols() != pb[i]->cols() || *pa[i] != *pb[i]) return false;
  return true;
}

TinyNet make_encoder(int input_dim, int hidden, int latent_dim) {
  return TinyNet({Conv1d::make(input_dim, hidden, 3, 2, 1), Relu{}, Conv1d::make(hidden, hidden, 3, 2, 1), Relu{},
                  ResidualBlock::make(hidden), Conv1d::make(hidden, latent_dim, 1, 1, 0)});
}

TinyNet make_decoder(int latent_dim, int hidden, int output_dim) {
  return TinyNet({Conv1d::make(latent_dim, hidden, 3, 1, 1), Relu{}, ResidualBlock::make(hidden), Upsample{2},
                  Conv1d::make(hidden, hidden, 3, 1, 1), Relu{}, Upsample{2}, Conv1d::make(hidden, output_dim, 3, 1, 1)});
}

void write_tinynet(std::ostream& out, const TinyNet& net) {
  binio::write_magic(out, "TNET");
  binio::write_u32(out, kTinyNetVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const Layer& layer : net.layers()) {
    binio::write_u32(out, static_cast<std::uint32_t>(layer.index()));
    std::visit(Overloaded{[&](const Conv1d& c) { write_conv(out, c); },
                          [&](const ResidualBlock& r) {
                            write_conv(out, r.conv_a);
                            write_conv(out, r.conv_b);
                          },
                          [&](const Upsample& u) { binio::write_u32(out, static_cast<std::uint32_t>(u.factor)); },
                          [](const Relu&) {}},
               layer);
  }
  for (const Matrix* m : net.parameters())
    for (Eigen::Index i = 0; i < m->size(); ++i) binio::write_f64(out, (*m)(i));
}

TinyNet read_tinynet(std::istream& in) {
  binio::expect_magic(in, "TNET", "network checkpoint");
  const std::uint32_t version = binio::read_u32(in);
  require(version == kTinyNetVersion, ErrorCode::kParse, "unsupported TNET version " + std::to_string(version));
  const std::uint32_t count = binio::read_u32(in);
  require(count > 0 && count < 4096, ErrorCode::kParse, "implausible TNET layer count");
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    switch (binio::read_u32(in)) {
      case 0: layers.emplace_back(read_conv(in)); break;
      case 1: layers.emplace_back(Relu{}); break;
      case 2: {
        Conv1d a = read_conv(in);
        Conv1d b = read_conv(in);
        layers.emplace_back(ResidualBlock{std::move(a), std::move(b)});
        break;
      }
      case 3: layers.emplace_back(Upsample{static_cast<int>(binio::read_u32(in))}); break;
      default: fail(ErrorCode::kParse, "unknown TNET layer type");
    }
  }
  TinyNet net(std::move(layers));
  for (Matrix* m : net.parameters())
    for (Eigen::Index i = 0; i < m->size(); ++i) (*m)(i) = binio::read_f64(in);
  return net;
}

}  // namespace oad
