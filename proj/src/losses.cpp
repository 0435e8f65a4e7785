#include "nrtx/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace nrtx {

double loss_rec(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("loss_rec: length mismatch");
  double acc = 0;
  for (size_t i = 0; i < pred.size(); i++) {
    acc += std::abs(pred[i].x - gt[i].x) + std::abs(pred[i].y - gt[i].y) +
           std::abs(pred[i].z - gt[i].z);
  }
  return pred.empty() ? 0.0 : acc / (3.0 * pred.size());
}

void loss_rec_backward(std::span<const Vec3> pred, std::span<const Vec3> gt,
                       std::span<Vec3> d_pred) {
  auto scale = 1.0 / (3.0 * pred.size());
  for (size_t i = 0; i < pred.size(); i++)
    for (int c = 0; c < 3; c++) {
      auto d = pred[i][c] - gt[i][c];
      d_pred[i][c] += d > 0 ? scale : (d < 0 ? -scale : 0.0);
    }
}

double loss_distortion(std::span<const double> weights, std::span<const double> t,
                       std::span<const double> delta) {
  auto n = weights.size();
  double bi = 0, prefix_w = 0, prefix_wt = 0, uni = 0;
  for (size_t i = 0; i < n; i++) {
    bi += weights[i] * (t[i] * prefix_w - prefix_wt);
    prefix_w += weights[i];
    prefix_wt += weights[i] * t[i];
    uni += weights[i] * weights[i] * delta[i];
  }
  return 2 * bi + uni / 3.0;
}

void loss_distortion_backward(std::span<const double> weights, std::span<const double> t,
                              std::span<const double> delta, double d_loss,
                              std::span<double> d_weights) {
  auto n = weights.size();
  std::vector<double> a(n), b(n);  // inclusive prefix sums of w and w*t
  double pw = 0, pwt = 0;
  for (size_t i = 0; i < n; i++) {
    pw += weights[i];
    pwt += weights[i] * t[i];
    a[i] = pw;
    b[i] = pwt;
  }
  auto a_total = pw, b_total = pwt;
  for (size_t k = 0; k < n; k++) {
    auto abs_sum = t[k] * a[k] - b[k] + (b_total - b[k]) - t[k] * (a_total - a[k]);
    d_weights[k] += d_loss * (2 * abs_sum + (2.0 / 3.0) * weights[k] * delta[k]);
  }
}

NormalLossResult loss_normal(Vec3 neg_density_grad, Vec3 n_f, bool clamp_max) {
  NormalLossResult out;
  auto len = length(neg_density_grad);
  if (len < 1e-12 || length(n_f) < 1e-12) {
    out.skipped = true;
    return out;
  }
  auto u = neg_density_grad / len;
  auto c = std::clamp(dot(u, n_f), -1.0, 1.0);
  auto angle = std::acos(c);
  constexpr double kClamp = kPi / 8;
  auto clamped = clamp_max ? std::max(angle, kClamp) : std::min(angle, kClamp);
  out.loss = -std::cos(clamped);
  // Inside the active branch the loss is -cos(angle) = -u.n_f.
  bool active = clamp_max ? angle > kClamp : angle < kClamp;
  if (active) out.d_n_f = -u;
  return out;
}

void ClusterState::init(int levels_, int f_dim, int j,
                        std::span<const double> feature_samples, Rng& rng) {
  levels = levels_;
  feature_dim = f_dim;
  centers_per_level = j;
  centers.resize(size_t(levels) * j * f_dim);
  // Draw initial centers from the provided per-level feature samples
  // (layout [sample][level][F]) or fall back to small random values.
  auto samples = feature_samples.size() / (size_t(levels) * f_dim);
  for (int level = 0; level < levels; level++) {
    auto dst = level_centers(level);
    for (int c = 0; c < j; c++)
      for (int f = 0; f < f_dim; f++) {
        if (samples > 0) {
          auto s = rng.next_below(uint32_t(samples));
          dst[c * f_dim + f] =
              feature_samples[(size_t(s) * levels + level) * f_dim + f];
        } else {
          dst[c * f_dim + f] = rng.uniform(-1e-4, 1e-4);
        }
      }
  }
}

ClusterLossResult cluster_loss_level(std::span<const double> features, int n, int f_dim,
                                     std::span<const double> centers, int j, double kappa,
                                     std::span<double> d_features,
                                     std::span<double> d_centers) {
  if (n < 1 || j < 1) throw std::invalid_argument("cluster_loss: empty input");
  ClusterLossResult out;
  out.q.assign(size_t(n) * j, 0.0);
  std::vector<double> kernel(size_t(n) * j);
  std::vector<double> col_sum(j, 0.0);

  auto expo = -(kappa + 1.0) / 2.0;
  for (int i = 0; i < n; i++) {
    double row = 0;
    for (int c = 0; c < j; c++) {
      double d2 = 0;
      for (int f = 0; f < f_dim; f++) {
        auto d = features[size_t(i) * f_dim + f] - centers[size_t(c) * f_dim + f];
        d2 += d * d;
      }
      auto k = std::pow(1.0 + d2 / kappa, expo);
      kernel[size_t(i) * j + c] = k;
      row += k;
    }
    for (int c = 0; c < j; c++) {
      auto q = kernel[size_t(i) * j + c] / row;
      out.q[size_t(i) * j + c] = q;
      col_sum[c] += q;
    }
  }

  // Hardened target, treated as constant.
  std::vector<double> p(size_t(n) * j);
  for (int i = 0; i < n; i++) {
    double row = 0;
    for (int c = 0; c < j; c++) {
      auto q = out.q[size_t(i) * j + c];
      p[size_t(i) * j + c] = q * q / col_sum[c];
      row += p[size_t(i) * j + c];
    }
    for (int c = 0; c < j; c++) p[size_t(i) * j + c] /= row;
  }

  double loss = 0;
  for (size_t i = 0; i < p.size(); i++) {
    if (p[i] > 0) loss += p[i] * std::log(p[i] / out.q[i]);
  }
  out.loss = loss;

  if (!d_features.empty() || !d_centers.empty()) {
    for (int i = 0; i < n; i++) {
      double row = 0;
      for (int c = 0; c < j; c++) row += kernel[size_t(i) * j + c];
      for (int c = 0; c < j; c++) {
        auto q = out.q[size_t(i) * j + c];
        auto pij = p[size_t(i) * j + c];
        // dL/dk_ij with P constant: (1 - p/q) / row.
        auto dk = (1.0 - (q > 0 ? pij / q : 0.0)) / row;
        // dk_ij/d(f_i) = -((kappa+1)/kappa) k / (1 + d2/kappa) * (f_i - mu_j).
        double d2 = 0;
        for (int f = 0; f < f_dim; f++) {
          auto d = features[size_t(i) * f_dim + f] - centers[size_t(c) * f_dim + f];
          d2 += d * d;
        }
        auto factor = dk * (-(kappa + 1.0) / kappa) * kernel[size_t(i) * j + c] /
                      (1.0 + d2 / kappa);
        for (int f = 0; f < f_dim; f++) {
          auto diff = features[size_t(i) * f_dim + f] - centers[size_t(c) * f_dim + f];
          if (!d_features.empty()) d_features[size_t(i) * f_dim + f] += factor * diff;
          if (!d_centers.empty()) d_centers[size_t(c) * f_dim + f] -= factor * diff;
        }
      }
    }
  }
  return out;
}

double kmeans_within_variance(std::span<const double> points, int n, int dim, int k,
                              int iterations, Rng& rng) {
  if (n == 0) return 0;
  k = std::min(k, n);
  std::vector<double> centers(size_t(k) * dim);
  std::vector<double> min_d2(n, std::numeric_limits<double>::max());
  std::vector<int> assign(n, 0);

  auto dist2 = [&](int i, const double* c) {
    double d2 = 0;
    for (int f = 0; f < dim; f++) {
      auto d = points[size_t(i) * dim + f] - c[f];
      d2 += d * d;
    }
    return d2;
  };

  // k-means++ seeding.
  auto first = rng.next_below(uint32_t(n));
  std::copy_n(&points[size_t(first) * dim], dim, centers.begin());
  for (int c = 1; c < k; c++) {
    double total = 0;
    for (int i = 0; i < n; i++) {
      auto d2 = dist2(i, &centers[size_t(c - 1) * dim]);
      min_d2[i] = std::min(min_d2[i], d2);
      total += min_d2[i];
    }
    int pick = 0;
    if (total > 0) {
      auto r = rng.uniform() * total;
      double acc = 0;
      for (int i = 0; i < n; i++) {
        acc += min_d2[i];
        if (acc >= r) { pick = i; break; }
      }
    } else {
      pick = int(rng.next_below(uint32_t(n)));
    }
    std::copy_n(&points[size_t(pick) * dim], dim, centers.begin() + size_t(c) * dim);
  }

  std::vector<double> sums(size_t(k) * dim);
  std::vector<int> counts(k);
  for (int it = 0; it < iterations; it++) {
    for (int i = 0; i < n; i++) {
      int best = 0;
      double best_d2 = dist2(i, centers.data());
      for (int c = 1; c < k; c++) {
        auto d2 = dist2(i, &centers[size_t(c) * dim]);
        if (d2 < best_d2) { best_d2 = d2; best = c; }
      }
      assign[i] = best;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; i++) {
      counts[assign[i]]++;
      for (int f = 0; f < dim; f++)
        sums[size_t(assign[i]) * dim + f] += points[size_t(i) * dim + f];
    }
    for (int c = 0; c < k; c++)
      if (counts[c] > 0)
        for (int f = 0; f < dim; f++)
          centers[size_t(c) * dim + f] = sums[size_t(c) * dim + f] / counts[c];
  }

  double var = 0;
  for (int i = 0; i < n; i++) var += dist2(i, &centers[size_t(assign[i]) * dim]);
  return var / n;
}

}  // namespace nrtx
