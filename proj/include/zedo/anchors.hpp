#pragma once

// Initial-pose (anchor) selection: k-means medoids, random dataset draws, and
// draws from the pose prior.

#include "zedo/core.hpp"
#include "zedo/diffusion/reverse.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace zedo {

enum class AnchorSource { KMeans, RandomSample, RandomGenerate };

inline const char* to_string(AnchorSource s) {
  switch (s) {
    case AnchorSource::KMeans: return "kmeans";
    case AnchorSource::RandomSample: return "random_sample";
    case AnchorSource::RandomGenerate: return "random_generate";
  }
  return "unknown";
}

struct AnchorSet {
  std::vector<Pose3D> poses;
  AnchorSource source = AnchorSource::KMeans;
  /// Dataset indices of the anchors (empty for generated anchors).
  std::vector<int> indices;
  std::uint64_t dataset_hash = 0;
  std::uint64_t seed = 0;
  /// Within-cluster sum of squares after each Lloyd iteration (k-means only).
  std::vector<double> sse_log;

  int size() const { return static_cast<int>(poses.size()); }
};

/// FNV-1a over the raw coordinate bytes.
inline std::uint64_t hash_poses(const std::vector<Pose3D>& poses) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Pose3D& p : poses) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.joints.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.joints.size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

struct KMeansOptions {
  int max_iters = 300;
  /// Converged when no centroid moves farther than this.
  double tolerance = 1e-6;
};

namespace detail {

/// N x D matrix, one flattened pose per row.
inline Eigen::MatrixXd stack_poses(const std::vector<Pose3D>& poses) {
  const Eigen::Index d = poses.front().joints.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(poses.size()), d);
  for (std::size_t i = 0; i < poses.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = poses[i].flattened().transpose();
  return m;
}

inline void check_dataset(const std::vector<Pose3D>& dataset, int count) {
  if (count < 1) throw ConfigError("anchor count must be >= 1");
  if (static_cast<int>(dataset.size()) < count)
    throw TooFewPoses("need " + std::to_string(count) + " poses, dataset has " + std::to_string(dataset.size()));
  for (const Pose3D& p : dataset)
    if (p.num_joints() != dataset.front().num_joints()) throw JointCountMismatch("dataset mixes joint counts");
}

/// k-means++ seeding; falls back to unchosen points once only duplicates remain.
inline std::vector<int> kmeanspp_seeds(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  std::vector<int> seeds;
  std::vector<char> chosen(n, 0);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  seeds.push_back(static_cast<int>(first(rng)));
  chosen[seeds[0]] = 1;
  Eigen::VectorXd d2 = (x.rowwise() - x.row(seeds[0])).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (static_cast<int>(seeds.size()) < k) {
    const double total = d2.sum();
    int pick = -1;
    if (total > 0.0) {
      double target = unif(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = static_cast<int>(i);
        target -= d2[i];
        if (target < 0.0) break;
      }
    } else {
      for (Eigen::Index i = 0; i < n && pick < 0; ++i)
        if (!chosen[i]) pick = static_cast<int>(i);
    }
    seeds.push_back(pick);
    chosen[pick] = 1;
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return seeds;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding on flattened poses. Each anchor is the
/// member of its cluster closest to the cluster centroid, so anchors are real
/// dataset poses and distinct.
inline AnchorSet kmeans_anchors(const std::vector<Pose3D>& dataset, int count, std::uint64_t seed,
                                const KMeansOptions& opt = {}) {
  detail::check_dataset(dataset, count);
  const Eigen::MatrixXd x = detail::stack_poses(dataset);
  const Eigen::Index n = x.rows();
  std::mt19937_64 rng(seed);

  const std::vector<int> seeds = detail::kmeanspp_seeds(x, count, rng);
  Eigen::MatrixXd centroids(count, x.cols());
  for (int c = 0; c < count; ++c) centroids.row(c) = x.row(seeds[c]);

  AnchorSet out;
  out.source = AnchorSource::KMeans;
  out.seed = seed;
  out.dataset_hash = hash_poses(dataset);

  std::vector<int> assign(n, 0);
  auto assign_points = [&] {
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&assign[i]);
      sse += (x.row(i) - centroids.row(assign[i])).squaredNorm();
    }
    return sse;
  };

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    out.sse_log.push_back(assign_points());
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(count, x.cols());
    std::vector<int> sizes(count, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(assign[i]) += x.row(i);
      ++sizes[assign[i]];
    }
    for (int c = 0; c < count; ++c) {
      if (sizes[c] > 0) {
        next.row(c) /= sizes[c];
        continue;
      }
      // Empty cluster: restart it at the point worst served by its centroid.
      Eigen::Index far = 0;
      (x - centroids(assign, Eigen::all)).rowwise().squaredNorm().maxCoeff(&far);
      next.row(c) = x.row(far);
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift < opt.tolerance) break;
  }
  out.sse_log.push_back(assign_points());

  std::vector<double> best(count, std::numeric_limits<double>::infinity());
  out.indices.assign(count, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (x.row(i) - centroids.row(assign[i])).squaredNorm();
    if (d < best[assign[i]]) {
      best[assign[i]] = d;
      out.indices[assign[i]] = static_cast<int>(i);
    }
  }
  // A cluster can end empty only if it was reseeded on the final iteration; take
  // the nearest unused pose instead.
  std::vector<char> used(n, 0);
  for (int idx : out.indices)
    if (idx >= 0) used[idx] = 1;
  for (int c = 0; c < count; ++c) {
    if (out.indices[c] >= 0) continue;
    double bd = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (x.row(i) - centroids.row(c)).squaredNorm();
      if (!used[i] && d < bd) bd = d, out.indices[c] = static_cast<int>(i);
    }
    used[out.indices[c]] = 1;
  }
  for (int idx : out.indices) out.poses.push_back(dataset[idx]);
  return out;
}

/// Uniform draw without replacement.
inline AnchorSet random_sample_anchors(const std::vector<Pose3D>& dataset, int count, std::uint64_t seed) {
  detail::check_dataset(dataset, count);
  std::mt19937_64 rng(seed);
  std::vector<int> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(idx.size()) - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  AnchorSet out;
  out.source = AnchorSource::RandomSample;
  out.seed = seed;
  out.dataset_hash = hash_poses(dataset);
  out.indices.assign(idx.begin(), idx.begin() + count);
  for (int i : out.indices) out.poses.push_back(dataset[i]);
  return out;
}

template <typename Scalar>
AnchorSet random_generate_anchors(const ScoreModel<Scalar>& model, int count, std::uint64_t seed,
                                  const SampleOptions& opts = {}) {
  if (count < 1) throw ConfigError("anchor count must be >= 1");
  AnchorSet out;
  out.source = AnchorSource::RandomGenerate;
  out.seed = seed;
  out.poses = sample(model, count, seed, opts);
  return out;
}

/// Within-cluster SSE of the dataset when every pose is assigned to its nearest anchor.
inline double anchor_sse(const std::vector<Pose3D>& dataset, const std::vector<Pose3D>& anchors) {
  const Eigen::MatrixXd x = detail::stack_poses(dataset);
  const Eigen::MatrixXd a = detail::stack_poses(anchors);
  double sse = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) sse += (a.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff();
  return sse;
}

}  // namespace zedo
