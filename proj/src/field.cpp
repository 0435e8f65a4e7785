#include "nrtx/field.hpp"

#include <cstring>
#include <stdexcept>

namespace nrtx {

DomainMap DomainMap::from_bounds(const Bounds3& bounds, double pad) {
  auto padded = bounds.dilated(pad);
  auto ext = padded.extent();
  auto side = std::max({ext.x, ext.y, ext.z, 1e-9});
  return {padded.lo, 1.0 / side};
}

void TextureField::init(const FieldConfig& cfg, const Bounds3& scene_bounds, Rng& rng) {
  config = cfg;
  grid_f.config = cfg.grid_f;
  grid_fhat.config = cfg.grid_fhat;
  grid_f.init(rng);
  grid_fhat.init(rng);
  decoder.init(grid_f.config.feature_dim(), grid_fhat.config.feature_dim(),
               cfg.decoder_width, cfg.decoder_depth, cfg.fourier_frequencies, rng);
  lighting.diffuse_order = cfg.diffuse_order;
  lighting.specular_order = cfg.specular_order;
  for (auto& ch : lighting.coeffs) ch.fill(0.0);
  domain = DomainMap::from_bounds(scene_bounds, 0.05 * scene_bounds.diagonal());
}

void TextureField::features_at(Vec3 footpoint, std::span<double> f,
                               std::span<double> f_hat, HashEncodeTape* tape_f,
                               HashEncodeTape* tape_fhat) const {
  auto unit = domain.to_unit(footpoint);
  hash_encode(grid_f, unit, f, tape_f);
  hash_encode(grid_fhat, unit, f_hat, tape_fhat);
}

SampleResult evaluate_features(const TextureField& field, std::span<const double> f,
                               std::span<const double> f_hat, double s,
                               const FrameTransport& transport, Vec3 view_dir,
                               SampleTape* tape) {
  SampleTape local;
  SampleTape& t = tape ? *tape : local;
  t.transport = transport;
  auto out = decode_attributes(field.decoder, f, f_hat, s, &t.decode);
  auto n_f = assemble_fine_normal_dir(out.theta, out.azimuth_dir, transport);
  auto n_c = transport.target_frame.col(2);
  auto color =
      shade(n_c, n_f, view_dir, out.k_d, out.k_s, out.g, field.lighting, &t.shade);
  t.shaded = true;
  return {out.sigma, color, out};
}

SampleResult evaluate_sample(const TextureField& field, Vec3 footpoint, double s,
                             const FrameTransport& transport, Vec3 view_dir,
                             SampleTape* tape) {
  SampleTape local;
  SampleTape& t = tape ? *tape : local;
  t.f.resize(field.f_dim());
  t.f_hat.resize(field.fhat_dim());
  field.features_at(footpoint, t.f, t.f_hat, &t.hash_f, &t.hash_fhat);
  return evaluate_features(field, t.f, t.f_hat, s, transport, view_dir,
                           tape ? tape : nullptr);
}

void FieldGrads::init_like(const TextureField& field) {
  grid_f.assign(field.grid_f.table.size(), 0.0);
  grid_fhat.assign(field.grid_fhat.table.size(), 0.0);
  decoder.init_like(field.decoder);
  for (auto& ch : lighting) ch.fill(0.0);
  touched_f.clear();
  touched_fhat.clear();
}

void FieldGrads::clear_small() {
  decoder.clear();
  for (auto& ch : lighting) ch.fill(0.0);
}

void FieldGrads::reduce_grids_into(FieldGrads& total) {
  // Duplicate touched entries are harmless: the first visit moves the
  // value, later visits add zero.
  for (auto base : touched_f) {
    total.grid_f[base] += grid_f[base];
    grid_f[base] = 0;
    total.touched_f.push_back(base);
  }
  for (auto base : touched_fhat) {
    total.grid_fhat[base] += grid_fhat[base];
    grid_fhat[base] = 0;
    total.touched_fhat.push_back(base);
  }
  touched_f.clear();
  touched_fhat.clear();
}

void FieldGrads::reduce_small_into(FieldGrads& total) {
  for (size_t l = 0; l < decoder.head_a.weights.size(); l++) {
    for (size_t i = 0; i < decoder.head_a.weights[l].size(); i++)
      total.decoder.head_a.weights[l][i] += decoder.head_a.weights[l][i];
    for (size_t i = 0; i < decoder.head_a.biases[l].size(); i++)
      total.decoder.head_a.biases[l][i] += decoder.head_a.biases[l][i];
  }
  for (size_t l = 0; l < decoder.head_b.weights.size(); l++) {
    for (size_t i = 0; i < decoder.head_b.weights[l].size(); i++)
      total.decoder.head_b.weights[l][i] += decoder.head_b.weights[l][i];
    for (size_t i = 0; i < decoder.head_b.biases[l].size(); i++)
      total.decoder.head_b.biases[l][i] += decoder.head_b.biases[l][i];
  }
  for (int ch = 0; ch < 3; ch++)
    for (int i = 0; i < kShMaxCoeffs; i++) total.lighting[ch][i] += lighting[ch][i];
  clear_small();
}

void FieldGrads::clear_grids() {
  for (auto base : touched_f) grid_f[base] = 0;
  for (auto base : touched_fhat) grid_fhat[base] = 0;
  touched_f.clear();
  touched_fhat.clear();
}

static void record_touched(const HashGrid& grid, const HashEncodeTape& tape,
                           std::vector<int64_t>& touched) {
  const int F = grid.config.features_per_level;
  const int64_t level_stride = static_cast<int64_t>(grid.config.table_size()) * F;
  for (int level = 0; level < tape.levels; level++)
    for (int corner = 0; corner < 8; corner++) {
      auto base = level * level_stride +
                  static_cast<int64_t>(tape.slot[level * 8 + corner]) * F;
      for (int f = 0; f < F; f++) touched.push_back(base + f);
    }
}

void backward_sample(const TextureField& field, const SampleTape& tape, double d_sigma,
                     Vec3 d_color, FieldGrads& sink, Vec3 coarse_normal, Vec3* d_query,
                     Vec3 d_n_f_extra) {
  FieldOutputGrads og;
  og.d_sigma = d_sigma;

  Vec3 d_n_f = d_n_f_extra;
  if (tape.shaded && (d_color.x != 0 || d_color.y != 0 || d_color.z != 0)) {
    ShadeGrads sg;
    sg.d_lighting = &sink.lighting;
    shade_backward(field.lighting, tape.shade, d_color, sg);
    og.d_k_d = sg.d_k_d;
    og.d_k_s = sg.d_k_s;
    og.d_g = sg.d_g;
    d_n_f += sg.d_n_f;
  }

  if (d_n_f.x != 0 || d_n_f.y != 0 || d_n_f.z != 0) {
    // Through n_f = M R(theta, azimuth): columns of M give the chain.
    auto m = transport_matrix(tape.transport);
    auto& out = tape.decode.out;
    auto st = std::sin(out.theta), ct = std::cos(out.theta);
    Vec3 dr_dtheta = {ct * out.azimuth_dir.x, ct * out.azimuth_dir.y, -st};
    og.d_theta = dot(d_n_f, m * dr_dtheta);
    og.d_azimuth_dir = {st * dot(d_n_f, m.col(0)), st * dot(d_n_f, m.col(1))};
  }

  double d_s = 0;
  std::vector<double> d_f(field.f_dim(), 0.0), d_fhat(field.fhat_dim(), 0.0);
  decode_backward(field.decoder, tape.decode, og, sink.decoder, d_f, d_fhat,
                  d_query ? &d_s : nullptr);

  Vec3 d_unit{};
  hash_encode_backward(field.grid_f, tape.hash_f, d_f, sink.grid_f,
                       d_query ? &d_unit : nullptr);
  hash_encode_backward(field.grid_fhat, tape.hash_fhat, d_fhat, sink.grid_fhat,
                       d_query ? &d_unit : nullptr);
  record_touched(field.grid_f, tape.hash_f, sink.touched_f);
  record_touched(field.grid_fhat, tape.hash_fhat, sink.touched_fhat);

  if (d_query) {
    // Defined projection rule: the footpoint passes the tangential
    // component, the signed distance the normal one; n_c is constant.
    auto d_footpoint = d_unit * field.domain.inv_scale;
    auto n = coarse_normal;
    *d_query += d_footpoint - dot(d_footpoint, n) * n + d_s * n;
  }
}

void add_grid_f_gradient(const TextureField& field, const HashEncodeTape& tape,
                         std::span<const double> d_f, FieldGrads& sink) {
  hash_encode_backward(field.grid_f, tape, d_f, sink.grid_f, nullptr);
  record_touched(field.grid_f, tape, sink.touched_f);
}

static NamedTensor tensor_from(const std::string& name, std::vector<uint32_t> dims,
                               std::span<const double> data) {
  NamedTensor t;
  t.name = name;
  t.dims = std::move(dims);
  t.data.resize(data.size());
  for (size_t i = 0; i < data.size(); i++) t.data[i] = static_cast<float>(data[i]);
  return t;
}

static void tensor_into(const NamedTensor& t, std::span<double> out) {
  if (t.data.size() != out.size())
    throw std::runtime_error("checkpoint tensor '" + t.name + "' has unexpected size");
  for (size_t i = 0; i < out.size(); i++) out[i] = t.data[i];
}

std::vector<NamedTensor> TextureField::to_tensors() const {
  std::vector<NamedTensor> tensors;
  auto grid_dims = [](const HashGrid& g) {
    return std::vector<uint32_t>{uint32_t(g.config.levels), uint32_t(g.config.table_size()),
                                 uint32_t(g.config.features_per_level)};
  };
  tensors.push_back(tensor_from("grid_f.table", grid_dims(grid_f), grid_f.table));
  tensors.push_back(tensor_from("grid_fhat.table", grid_dims(grid_fhat), grid_fhat.table));
  auto dump_mlp = [&](const std::string& prefix, const Mlp& mlp) {
    for (int l = 0; l < mlp.layer_count(); l++) {
      tensors.push_back(tensor_from(prefix + ".w" + std::to_string(l),
                                    {uint32_t(mlp.layer_rows(l)), uint32_t(mlp.layer_cols(l))},
                                    mlp.weights[l]));
      tensors.push_back(tensor_from(prefix + ".b" + std::to_string(l),
                                    {uint32_t(mlp.layer_rows(l))}, mlp.biases[l]));
    }
  };
  dump_mlp("decoder.head_a", decoder.head_a);
  dump_mlp("decoder.head_b", decoder.head_b);
  std::vector<double> light(3 * kShMaxCoeffs);
  for (int ch = 0; ch < 3; ch++)
    for (int i = 0; i < kShMaxCoeffs; i++) light[ch * kShMaxCoeffs + i] = lighting.coeffs[ch][i];
  tensors.push_back(tensor_from("lighting.sh", {3, kShMaxCoeffs}, light));
  std::vector<double> dom = {domain.origin.x, domain.origin.y, domain.origin.z,
                             domain.inv_scale};
  tensors.push_back(tensor_from("domain", {4}, dom));
  return tensors;
}

void TextureField::from_tensors(const std::vector<NamedTensor>& tensors) {
  auto need = [&](const std::string& name) -> const NamedTensor& {
    auto t = find_tensor(tensors, name);
    if (!t) throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
    return *t;
  };
  tensor_into(need("grid_f.table"), grid_f.table);
  tensor_into(need("grid_fhat.table"), grid_fhat.table);
  auto load_mlp = [&](const std::string& prefix, Mlp& mlp) {
    for (int l = 0; l < mlp.layer_count(); l++) {
      tensor_into(need(prefix + ".w" + std::to_string(l)), mlp.weights[l]);
      tensor_into(need(prefix + ".b" + std::to_string(l)), mlp.biases[l]);
    }
  };
  load_mlp("decoder.head_a", decoder.head_a);
  load_mlp("decoder.head_b", decoder.head_b);
  std::vector<double> light(3 * kShMaxCoeffs);
  tensor_into(need("lighting.sh"), light);
  for (int ch = 0; ch < 3; ch++)
    for (int i = 0; i < kShMaxCoeffs; i++) lighting.coeffs[ch][i] = light[ch * kShMaxCoeffs + i];
  std::vector<double> dom(4);
  tensor_into(need("domain"), dom);
  domain.origin = {dom[0], dom[1], dom[2]};
  domain.inv_scale = dom[3];
}

}  // namespace nrtx
