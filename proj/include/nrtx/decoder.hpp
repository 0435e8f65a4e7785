#pragma once

#include <span>
#include <string>
#include <vector>

#include "nrtx/math.hpp"
#include "nrtx/rng.hpp"

namespace nrtx {

// (s, sin(2^k pi s), cos(2^k pi s)) for k < num_frequencies; dimension 2m+1.
struct FourierEmbedding {
  int num_frequencies = 4;

  int dim() const { return 2 * num_frequencies + 1; }
  void embed(double s, std::span<double> out) const;
  // d(out_i)/ds for the same layout.
  void embed_grad(double s, std::span<double> d_out) const;
};

// Fully-connected ReLU network, manual forward/backward.
struct Mlp {
  int in_dim = 0;
  int hidden_width = 0;
  int hidden_layers = 0;
  int out_dim = 0;
  // weights[l] is row-major [rows x cols] mapping layer input -> output.
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void init(int in, int width, int depth, int out, Rng& rng);
  void zero_output_layer();
  int layer_count() const { return hidden_layers + 1; }
  int layer_rows(int l) const { return l == hidden_layers ? out_dim : hidden_width; }
  int layer_cols(int l) const { return l == 0 ? in_dim : hidden_width; }
  int64_t param_count() const;
};

// Pre-activation values per layer plus the input, for backprop.
struct MlpTape {
  std::vector<std::vector<double>> pre;  // [layer][rows]
  std::vector<double> input;
};

void mlp_forward(const Mlp& mlp, std::span<const double> input, std::span<double> out,
                 MlpTape* tape = nullptr);

// Mirrors the Mlp parameter layout.
struct MlpGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void init_like(const Mlp& mlp);
  void clear();
  void add_to(std::span<double> flat) const;  // appends in canonical order
};

// d_input may be null when the chain to the inputs is not needed.
void mlp_backward(const Mlp& mlp, const MlpTape& tape, std::span<const double> d_out,
                  MlpGrads& grads, std::span<double> d_input);

// Decoded field attributes at a sample.
struct FieldOutputs {
  double sigma = 0;        // density, >= 0
  Vec3 k_d;                // diffuse, [0,1]^3
  double k_s = 0;          // specular, [0,1]
  double g = 1;            // glossiness, > 1
  double theta = 0;        // elevation in [0, pi]
  double phi = 0;          // azimuth in [0, 2pi)
  Vec2 azimuth_dir = {1, 0};  // (cos phi, sin phi)
};

// Two-head decoder. Head A maps (f, embed(s)) to density, Phong
// coefficients and elevation; head B maps (f_hat, embed(s)) to the azimuth
// direction. The split keeps f free of tangent-convention information.
struct Decoder {
  FourierEmbedding embedding;
  Mlp head_a;  // outputs (sigma, k_d rgb, k_s, g, theta) raw
  Mlp head_b;  // outputs the azimuth 2-vector

  static constexpr int kHeadAOutputs = 7;
  static constexpr int kHeadBOutputs = 2;

  void init(int f_dim, int fhat_dim, int width, int depth, int fourier_m, Rng& rng);
};

struct DecodeTape {
  MlpTape tape_a, tape_b;
  std::vector<double> raw_a;  // head A pre-activation outputs
  std::vector<double> raw_b;
  std::vector<double> embed;  // shared embedding of s
  double s = 0;
  double v_norm = 0;  // |head B output|
  FieldOutputs out;
};

FieldOutputs decode_attributes(const Decoder& dec, std::span<const double> f,
                               std::span<const double> f_hat, double s,
                               DecodeTape* tape = nullptr);

// Upstream gradients for the decoded attributes.
struct FieldOutputGrads {
  double d_sigma = 0;
  Vec3 d_k_d;
  double d_k_s = 0;
  double d_g = 0;
  double d_theta = 0;
  Vec2 d_azimuth_dir;  // w.r.t. (cos phi, sin phi)
};

struct DecoderGrads {
  MlpGrads head_a, head_b;
  void init_like(const Decoder& dec);
  void clear();
};

// Chains to the MLP weights and, when requested, to (f, f_hat, s).
void decode_backward(const Decoder& dec, const DecodeTape& tape,
                     const FieldOutputGrads& d_out, DecoderGrads& grads,
                     std::span<double> d_f, std::span<double> d_fhat,
                     double* d_s);

}  // namespace nrtx
