#pragma once

#include <span>
#include <vector>

#include "nrtx/math.hpp"
#include "nrtx/rng.hpp"

namespace nrtx {

// Mean absolute error over rays and channels.
double loss_rec(std::span<const Vec3> pred, std::span<const Vec3> gt);
// d(loss)/d(pred_i), the sign subgradient / (3 n).
void loss_rec_backward(std::span<const Vec3> pred, std::span<const Vec3> gt,
                       std::span<Vec3> d_pred);

// Per-ray distortion: sum_ij w_i w_j |t_i - t_j| + (1/3) sum_i w_i^2 d_i,
// with t ascending. O(n) via prefix sums.
double loss_distortion(std::span<const double> weights, std::span<const double> t,
                       std::span<const double> delta);
void loss_distortion_backward(std::span<const double> weights, std::span<const double> t,
                              std::span<const double> delta, double d_loss,
                              std::span<double> d_weights);

// Relaxed cosine supervision of the fine normal against the negated
// density gradient: -cos(clamped angle). Gradient flows to n_f only.
// clamp_max switches min(angle, pi/8) to max(angle, pi/8).
struct NormalLossResult {
  double loss = 0;
  Vec3 d_n_f;  // d(loss)/d(n_f)
  bool skipped = false;
};
NormalLossResult loss_normal(Vec3 neg_density_grad, Vec3 n_f, bool clamp_max = false);

// Per-level trainable cluster centers for the f grid features.
struct ClusterState {
  int levels = 0;
  int feature_dim = 0;  // F
  int centers_per_level = 0;
  std::vector<double> centers;  // [level][center][feature]

  void init(int levels_, int f_dim, int j, std::span<const double> feature_samples,
            Rng& rng);
  double* level_centers(int level) {
    return centers.data() + size_t(level) * centers_per_level * feature_dim;
  }
  const double* level_centers(int level) const {
    return centers.data() + size_t(level) * centers_per_level * feature_dim;
  }
};

// Student-t soft assignment Q, hardened target P (constant), KL(P||Q) for
// one level. Gradients flow to features and centers through Q.
struct ClusterLossResult {
  double loss = 0;
  std::vector<double> q;  // row-major [n][j], kept for inspection/tests
};
ClusterLossResult cluster_loss_level(std::span<const double> features, int n, int f_dim,
                                     std::span<const double> centers, int j, double kappa,
                                     std::span<double> d_features,
                                     std::span<double> d_centers);

// Seeded k-means (k-means++ init, fixed Lloyd iterations). Returns the mean
// within-cluster variance; used as the cluster-compactness statistic.
double kmeans_within_variance(std::span<const double> points, int n, int dim, int k,
                              int iterations, Rng& rng);

}  // namespace nrtx
