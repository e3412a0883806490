#pragma once

#include <iosfwd>
#include <variant>
#include <vector>

#include "oad/core/rng.hpp"
#include "oad/core/types.hpp"

namespace oad {

/// 1-D temporal convolution over a time-major (T x C_in) signal.
///
/// weight is C_out x (kernel * C_in); column kk * C_in + c multiplies input
/// channel c at tap kk. bias is 1 x C_out.
struct Conv1d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  Matrix weight;
  Matrix bias;

  static Conv1d make(int in_channels, int out_channels, int kernel, int stride, int padding);
  Eigen::Index output_length(Eigen::Index input_length) const;
};

struct Relu {};

/// x + conv_b(relu(conv_a(x))) with length-preserving convolutions.
struct ResidualBlock {
  Conv1d conv_a;
  Conv1d conv_b;

  static ResidualBlock make(int channels, int kernel = 3);
};

/// Nearest-neighbour temporal upsampling by an integer factor.
struct Upsample {
  int factor = 2;
};

using Layer = std::variant<Conv1d, Relu, ResidualBlock, Upsample>;

/// Per-layer intermediates kept by forward_train for backward.
struct LayerCache {
  Matrix a;
  Matrix b;
  Matrix c;
  Eigen::Index input_length = 0;
};

struct Tape {
  std::vector<LayerCache> layers;
};

/// Sequential network of the layers above with hand-derived gradients.
///
/// Parameters are enumerated layer by layer (weight then bias; a residual
/// block contributes conv_a then conv_b). Gradient vectors use the same
/// order and shapes.
class TinyNet {
 public:
  TinyNet() = default;
  explicit TinyNet(std::vector<Layer> layers);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  int input_channels() const;
  int output_channels() const;
  Eigen::Index output_length(Eigen::Index input_length) const;

  Matrix forward(const Matrix& x) const;
  Matrix forward_train(const Matrix& x, Tape& tape) const;
  /// Accumulates parameter gradients into grads and returns d loss / d input.
  Matrix backward(const Matrix& grad_output, const Tape& tape, std::vector<Matrix>& grads) const;

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<Matrix> zero_gradients() const;
  std::size_t parameter_count() const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  void initialize(Rng& rng);

  friend bool operator==(const TinyNet& a, const TinyNet& b);

 private:
  std::vector<Layer> layers_;
};

/// Conv(k3,s2) ReLU Conv(k3,s2) ReLU ResBlock Conv(k1): length ceil(T/4).
TinyNet make_encoder(int input_dim, int hidden, int latent_dim);
/// Mirror of make_encoder with nearest upsampling; output length 4 t_lat.
TinyNet make_decoder(int latent_dim, int hidden, int output_dim);

// TNET container: magic, version, layer table, f64 parameters.
void write_tinynet(std::ostream& out, const TinyNet& net);
TinyNet read_tinynet(std::istream& in);

}  // namespace oad
