#include "nrtx/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace nrtx {

void FourierEmbedding::embed(double s, std::span<double> out) const {
  out[0] = s;
  for (int k = 0; k < num_frequencies; k++) {
    auto arg = std::ldexp(kPi * s, k);  // 2^k * pi * s
    out[1 + 2 * k] = std::sin(arg);
    out[2 + 2 * k] = std::cos(arg);
  }
}

void FourierEmbedding::embed_grad(double s, std::span<double> d_out) const {
  d_out[0] = 1;
  for (int k = 0; k < num_frequencies; k++) {
    auto freq = std::ldexp(kPi, k);
    d_out[1 + 2 * k] = freq * std::cos(freq * s);
    d_out[2 + 2 * k] = -freq * std::sin(freq * s);
  }
}

void Mlp::init(int in, int width, int depth, int out, Rng& rng) {
  in_dim = in;
  hidden_width = width;
  hidden_layers = depth;
  out_dim = out;
  weights.assign(layer_count(), {});
  biases.assign(layer_count(), {});
  for (int l = 0; l < layer_count(); l++) {
    auto rows = layer_rows(l), cols = layer_cols(l);
    auto bound = 1.0 / std::sqrt(double(cols));
    weights[l].resize(static_cast<size_t>(rows) * cols);
    biases[l].assign(rows, 0.0);
    for (auto& w : weights[l]) w = rng.uniform(-bound, bound);
    for (auto& b : biases[l]) b = rng.uniform(-bound, bound);
  }
}

void Mlp::zero_output_layer() {
  auto l = layer_count() - 1;
  std::fill(weights[l].begin(), weights[l].end(), 0.0);
  std::fill(biases[l].begin(), biases[l].end(), 0.0);
}

int64_t Mlp::param_count() const {
  int64_t n = 0;
  for (int l = 0; l < layer_count(); l++)
    n += static_cast<int64_t>(weights[l].size()) + biases[l].size();
  return n;
}

void mlp_forward(const Mlp& mlp, std::span<const double> input, std::span<double> out,
                 MlpTape* tape) {
  if (static_cast<int>(input.size()) != mlp.in_dim)
    throw std::invalid_argument("mlp input dimension mismatch");
  if (tape) {
    tape->pre.resize(mlp.layer_count());
    tape->input.assign(input.begin(), input.end());
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (int l = 0; l < mlp.layer_count(); l++) {
    auto rows = mlp.layer_rows(l), cols = mlp.layer_cols(l);
    next.assign(rows, 0.0);
    const double* w = mlp.weights[l].data();
    for (int r = 0; r < rows; r++) {
      double acc = mlp.biases[l][r];
      const double* wr = w + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; c++) acc += wr[c] * cur[c];
      next[r] = acc;
    }
    if (tape) tape->pre[l] = next;
    if (l < mlp.layer_count() - 1)
      for (auto& v : next) v = v > 0 ? v : 0;  // ReLU
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

void MlpGrads::init_like(const Mlp& mlp) {
  weights.resize(mlp.layer_count());
  biases.resize(mlp.layer_count());
  for (int l = 0; l < mlp.layer_count(); l++) {
    weights[l].assign(mlp.weights[l].size(), 0.0);
    biases[l].assign(mlp.biases[l].size(), 0.0);
  }
}

void MlpGrads::clear() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGrads::add_to(std::span<double> flat) const {
  size_t at = 0;
  for (size_t l = 0; l < weights.size(); l++) {
    for (auto v : weights[l]) flat[at++] += v;
    for (auto v : biases[l]) flat[at++] += v;
  }
}

void mlp_backward(const Mlp& mlp, const MlpTape& tape, std::span<const double> d_out,
                  MlpGrads& grads, std::span<double> d_input) {
  std::vector<double> delta(d_out.begin(), d_out.end());
  std::vector<double> prev;
  for (int l = mlp.layer_count() - 1; l >= 0; l--) {
    auto rows = mlp.layer_rows(l), cols = mlp.layer_cols(l);
    // Activation of the layer input.
    auto input_of = [&](int c) -> double {
      if (l == 0) return tape.input[c];
      auto pre = tape.pre[l - 1][c];
      return pre > 0 ? pre : 0;
    };
    double* gw = grads.weights[l].data();
    double* gb = grads.biases[l].data();
    prev.assign(cols, 0.0);
    const double* w = mlp.weights[l].data();
    for (int r = 0; r < rows; r++) {
      auto d = delta[r];
      gb[r] += d;
      double* gwr = gw + static_cast<size_t>(r) * cols;
      const double* wr = w + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; c++) {
        gwr[c] += d * input_of(c);
        prev[c] += d * wr[c];
      }
    }
    if (l > 0) {
      // Through the ReLU of the previous layer.
      for (int c = 0; c < cols; c++)
        if (tape.pre[l - 1][c] <= 0) prev[c] = 0;
    }
    delta.swap(prev);
  }
  if (!d_input.empty())
    for (size_t c = 0; c < delta.size(); c++) d_input[c] += delta[c];
}

void Decoder::init(int f_dim, int fhat_dim, int width, int depth, int fourier_m,
                   Rng& rng) {
  embedding.num_frequencies = fourier_m;
  head_a.init(f_dim + embedding.dim(), width, depth, kHeadAOutputs, rng);
  head_b.init(fhat_dim + embedding.dim(), width, depth, kHeadBOutputs, rng);
}

static double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

FieldOutputs decode_attributes(const Decoder& dec, std::span<const double> f,
                               std::span<const double> f_hat, double s,
                               DecodeTape* tape) {
  auto edim = dec.embedding.dim();
  if (static_cast<int>(f.size()) + edim != dec.head_a.in_dim ||
      static_cast<int>(f_hat.size()) + edim != dec.head_b.in_dim)
    throw std::invalid_argument("decoder feature dimension mismatch");

  DecodeTape local;
  DecodeTape& t = tape ? *tape : local;
  t.embed.resize(edim);
  dec.embedding.embed(s, t.embed);
  t.s = s;

  std::vector<double> in_a(f.begin(), f.end());
  in_a.insert(in_a.end(), t.embed.begin(), t.embed.end());
  t.raw_a.resize(Decoder::kHeadAOutputs);
  mlp_forward(dec.head_a, in_a, t.raw_a, tape ? &t.tape_a : nullptr);

  std::vector<double> in_b(f_hat.begin(), f_hat.end());
  in_b.insert(in_b.end(), t.embed.begin(), t.embed.end());
  t.raw_b.resize(Decoder::kHeadBOutputs);
  mlp_forward(dec.head_b, in_b, t.raw_b, tape ? &t.tape_b : nullptr);

  FieldOutputs out;
  out.sigma = softplus(t.raw_a[0]);
  out.k_d = {sigmoid(t.raw_a[1]), sigmoid(t.raw_a[2]), sigmoid(t.raw_a[3])};
  out.k_s = sigmoid(t.raw_a[4]);
  out.g = softplus(t.raw_a[5]) + 1;
  out.theta = kPi * sigmoid(t.raw_a[6]);

  auto vx = t.raw_b[0], vy = t.raw_b[1];
  auto norm = std::sqrt(vx * vx + vy * vy);
  t.v_norm = norm;
  if (norm < 1e-12) {
    out.azimuth_dir = {1, 0};  // undefined direction; gradient is skipped
    out.phi = 0;
  } else {
    out.azimuth_dir = {vx / norm, vy / norm};
    out.phi = std::atan2(out.azimuth_dir.y, out.azimuth_dir.x);
    if (out.phi < 0) out.phi += 2 * kPi;
  }
  t.out = out;
  return out;
}

void DecoderGrads::init_like(const Decoder& dec) {
  head_a.init_like(dec.head_a);
  head_b.init_like(dec.head_b);
}

void DecoderGrads::clear() {
  head_a.clear();
  head_b.clear();
}

void decode_backward(const Decoder& dec, const DecodeTape& tape,
                     const FieldOutputGrads& d_out, DecoderGrads& grads,
                     std::span<double> d_f, std::span<double> d_fhat, double* d_s) {
  double d_raw_a[Decoder::kHeadAOutputs];
  d_raw_a[0] = d_out.d_sigma * sigmoid(tape.raw_a[0]);
  for (int c = 0; c < 3; c++) {
    auto kd = tape.out.k_d[c];
    d_raw_a[1 + c] = d_out.d_k_d[c] * kd * (1 - kd);
  }
  d_raw_a[4] = d_out.d_k_s * tape.out.k_s * (1 - tape.out.k_s);
  d_raw_a[5] = d_out.d_g * sigmoid(tape.raw_a[5]);
  {
    auto st = tape.out.theta / kPi;  // sigmoid(theta_raw)
    d_raw_a[6] = d_out.d_theta * kPi * st * (1 - st);
  }

  double d_raw_b[Decoder::kHeadBOutputs] = {0, 0};
  if (tape.v_norm >= 1e-12) {
    // v_hat = v / |v|: d v_hat / d v = (I - v_hat v_hat^T) / |v|.
    auto cx = tape.out.azimuth_dir.x, cy = tape.out.azimuth_dir.y;
    auto gx = d_out.d_azimuth_dir.x, gy = d_out.d_azimuth_dir.y;
    auto dot_g = cx * gx + cy * gy;
    d_raw_b[0] = (gx - dot_g * cx) / tape.v_norm;
    d_raw_b[1] = (gy - dot_g * cy) / tape.v_norm;
  }

  auto f_dim = dec.head_a.in_dim - dec.embedding.dim();
  auto fhat_dim = dec.head_b.in_dim - dec.embedding.dim();
  std::vector<double> d_in_a(dec.head_a.in_dim, 0.0);
  std::vector<double> d_in_b(dec.head_b.in_dim, 0.0);
  mlp_backward(dec.head_a, tape.tape_a, {d_raw_a, Decoder::kHeadAOutputs}, grads.head_a,
               d_in_a);
  mlp_backward(dec.head_b, tape.tape_b, {d_raw_b, Decoder::kHeadBOutputs}, grads.head_b,
               d_in_b);

  if (!d_f.empty())
    for (int i = 0; i < f_dim; i++) d_f[i] += d_in_a[i];
  if (!d_fhat.empty())
    for (int i = 0; i < fhat_dim; i++) d_fhat[i] += d_in_b[i];
  if (d_s) {
    std::vector<double> de(dec.embedding.dim());
    dec.embedding.embed_grad(tape.s, de);
    double acc = 0;
    for (int i = 0; i < dec.embedding.dim(); i++)
      acc += de[i] * (d_in_a[f_dim + i] + d_in_b[fhat_dim + i]);
    *d_s += acc;
  }
}

}  // namespace nrtx
