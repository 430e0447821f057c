#pragma once

// Maximization of the convolution kernel over rigid motions of the second
// cloud: multi-start gradient ascent seeded from principal-axis superpositions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "supck/geometry.hpp"

namespace supck {

struct AlignConfig {
  double sigma = 1.0;
  double lambda = kNoLabels;
  int max_iterations = 300;
  double gradient_tolerance = 1e-5;  // on the rescaled objective, see detail::AlignmentProblem
  double score_tolerance = 1e-9;     // relative improvement
  double initial_step = 0.1;
  double max_step = 1.0;
  double axis_similarity_ratio = 0.9;
  int extra_random_starts = 2;
  std::uint64_t seed = 0;

  void validate() const {
    check_kernel_parameters(sigma, lambda);
    if (max_iterations <= 0) throw ParameterError("max_iterations must be positive");
    if (!(gradient_tolerance > 0.0)) throw ParameterError("gradient_tolerance must be positive");
    if (!(score_tolerance > 0.0)) throw ParameterError("score_tolerance must be positive");
    if (!(initial_step > 0.0)) throw ParameterError("initial_step must be positive");
    if (!(max_step >= initial_step)) throw ParameterError("max_step must be >= initial_step");
    if (!(axis_similarity_ratio > 0.0 && axis_similarity_ratio <= 1.0))
      throw ParameterError("axis_similarity_ratio must lie in (0, 1]");
    if (extra_random_starts < 0) throw ParameterError("extra_random_starts must be non-negative");
  }
};

struct AlignResult {
  double score = 0.0;
  RigidTransform transform;
  int start_index = 0;
  int iterations_used = 0;
  bool converged = false;
};

/// Principal-axis starting transforms mapping centroid(p2) onto centroid(p1).
inline std::vector<RigidTransform> initial_transforms(const AtomCloud& p1, const AtomCloud& p2,
                                                      double axis_similarity_ratio) {
  const EllipsoidSummary e1 = ellipsoid_summary(p1);
  const EllipsoidSummary e2 = ellipsoid_summary(p2);
  if (p1.size() == 1 || p2.size() == 1) return {RigidTransform{0, 0, 0, e1.centroid - e2.centroid}};

  auto similar = [axis_similarity_ratio](const EllipsoidSummary& e, std::size_t k) {
    if (e.axis_lengths[k] <= 0.0) return true;
    return e.axis_lengths[k + 1] >= axis_similarity_ratio * e.axis_lengths[k];
  };
  const bool swap01 = similar(e1, 0) || similar(e2, 0);
  const bool swap12 = similar(e1, 1) || similar(e2, 1);

  std::vector<std::array<int, 3>> assignments{{0, 1, 2}};
  if (swap01 && swap12) {
    assignments = {{0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  } else if (swap01) {
    assignments.push_back({1, 0, 2});
  } else if (swap12) {
    assignments.push_back({0, 2, 1});
  }

  std::vector<Mat3> rotations;
  for (const auto& perm : assignments) {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3 r = Mat3::Zero();
      for (int k = 0; k < 3; ++k) {
        const double s = (signs >> k) & 1 ? -1.0 : 1.0;
        r += s * e1.axis_directions.col(perm[static_cast<std::size_t>(k)]) * e2.axis_directions.col(k).transpose();
      }
      if (r.determinant() < 0.0) continue;
      const bool duplicate = std::any_of(rotations.begin(), rotations.end(),
                                         [&](const Mat3& q) { return (q - r).norm() < 1e-9; });
      if (!duplicate) rotations.push_back(r);
    }
  }

  std::vector<RigidTransform> out;
  out.reserve(rotations.size());
  for (const Mat3& r : rotations) out.push_back(transform_from_matrix(r, e1.centroid - r * e2.centroid));
  return out;
}

/// Seeded random rotations mapping centroid(p2) onto centroid(p1). Each is
/// drawn relative to the principal frames of both clouds, so moving either
/// cloud moves the starts with it. Odd entries are the inverse of the
/// preceding one, which keeps the start set closed under swapping p1 and p2.
inline std::vector<RigidTransform> random_transforms(const AtomCloud& p1, const AtomCloud& p2, int count,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const EllipsoidSummary e1 = ellipsoid_summary(p1), e2 = ellipsoid_summary(p2);
  std::vector<RigidTransform> out;
  Mat3 q = Mat3::Identity();
  for (int k = 0; k < count; ++k) {
    if (k % 2 == 0) {
      Eigen::Quaterniond u(normal(rng), normal(rng), normal(rng), normal(rng));
      u.normalize();
      q = u.toRotationMatrix();
    } else {
      q.transposeInPlace();
    }
    const Mat3 r = e1.axis_directions * q * e2.axis_directions.transpose();
    out.push_back(transform_from_matrix(r, e1.centroid - r * e2.centroid));
  }
  return out;
}

namespace detail {

// The ascent runs on centered copies of both clouds. The objective is
// multiplied by sigma^2 / min(N1, N2), and rotations are updated as
// R <- exp([w]x) R with w measured as arc length on the geometric mean of
// the two gyration radii. One unit of step then moves atoms by roughly one
// Angstrom whatever the cloud size, sigma or current orientation. The public
// transform is recovered as t = t_c + c1 - R c2.
class AlignmentProblem {
 public:
  struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
  };

  AlignmentProblem(const AtomCloud& p1, const AtomCloud& p2, double sigma, double lambda)
      : c1_(centroid(p1)),
        c2_(centroid(p2)),
        centered_(p1.positions().colwise() - c1_, p1.labels(), p2.positions().colwise() - c2_, p2.labels(),
                  sigma, lambda),
        original_(p1, p2, sigma, lambda),
        scale_(sigma * sigma / static_cast<double>(std::min(p1.size(), p2.size()))) {
    const double rg1 = (p1.positions().colwise() - c1_).colwise().squaredNorm().mean();
    const double rg2 = (p2.positions().colwise() - c2_).colwise().squaredNorm().mean();
    const double r2 = std::max(std::sqrt(rg1 * rg2), sigma * sigma);
    metric_ << 1.0 / r2, 1.0 / r2, 1.0 / r2, 1.0, 1.0, 1.0;
  }

  /// Per-coordinate factors turning the gradient into the ascent direction.
  const Vec6& metric() const noexcept { return metric_; }

  Pose to_centered(const RigidTransform& t) const {
    const Mat3 r = rotation_matrix(t);
    return {r, t.translation + r * c2_ - c1_};
  }

  RigidTransform from_centered(const Pose& c) const {
    return transform_from_matrix(c.rotation, c.translation + c1_ - c.rotation * c2_);
  }

  static Pose moved(const Pose& c, const Vec6& step) {
    const Vec3 w = step.head<3>();
    const double angle = w.norm();
    Pose out = c;
    if (angle > 0.0) out.rotation = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() * c.rotation;
    out.translation += step.tail<3>();
    return out;
  }

  double normalized_value(const Pose& c) const { return centered_.value(c.rotation, c.translation) * scale_; }

  KernelValueGradient normalized_value_and_gradient(const Pose& c) const {
    KernelValueGradient e = centered_.local_value_and_gradient(c.rotation, c.translation);
    e.value *= scale_;
    e.gradient *= scale_;
    return e;
  }

  double score(const RigidTransform& t) const { return original_.value(t); }

 private:
  Vec3 c1_, c2_;
  KernelObjective centered_;
  KernelObjective original_;
  double scale_;
  Vec6 metric_;
};

inline RigidTransform wrapped(RigidTransform t) {
  t.phi = wrap_angle(t.phi);
  t.theta = wrap_angle(t.theta);
  t.psi = wrap_angle(t.psi);
  return t;
}

inline AlignResult ascend(const AlignmentProblem& problem, const RigidTransform& start, const AlignConfig& cfg,
                          std::vector<double>* trace) {
  constexpr double kMinStep = 1e-14;

  const RigidTransform start_public = wrapped(start);
  AlignmentProblem::Pose pose = problem.to_centered(start_public);
  KernelValueGradient cur = problem.normalized_value_and_gradient(pose);
  if (trace) trace->push_back(cur.value);

  double step = cfg.initial_step;
  int iterations = 0;
  bool converged = false;
  while (iterations < cfg.max_iterations) {
    const Vec6 direction = problem.metric().cwiseProduct(cur.gradient);
    if (problem.metric().cwiseSqrt().cwiseProduct(cur.gradient).lpNorm<Eigen::Infinity>() <
        cfg.gradient_tolerance) {
      converged = true;
      break;
    }
    AlignmentProblem::Pose candidate;
    double candidate_value = 0.0;
    bool accepted = false;
    while (step >= kMinStep) {
      candidate = AlignmentProblem::moved(pose, step * direction);
      candidate_value = problem.normalized_value(candidate);
      if (candidate_value > cur.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = true;
      break;
    }
    const double improvement = candidate_value - cur.value;
    pose = candidate;
    cur = problem.normalized_value_and_gradient(pose);
    ++iterations;
    if (trace) trace->push_back(cur.value);
    step = std::min(2.0 * step, cfg.max_step);
    if (improvement < cfg.score_tolerance * std::max(std::abs(cur.value), 1e-300)) {
      converged = true;
      break;
    }
  }

  AlignResult result;
  result.transform = wrapped(problem.from_centered(pose));
  result.score = problem.score(result.transform);
  result.iterations_used = iterations;
  result.converged = converged;
  const double start_score = problem.score(start_public);
  if (result.score < start_score) {
    result.transform = start_public;
    result.score = start_score;
  }
  return result;
}

}  // namespace detail

/// Single gradient-ascent run from `start`. When `trace` is given, the
/// normalized objective after every accepted step is appended to it.
inline AlignResult gradient_ascent(const AtomCloud& p1, const AtomCloud& p2, const RigidTransform& start,
                                   const AlignConfig& cfg, std::vector<double>* trace = nullptr) {
  cfg.validate();
  const detail::AlignmentProblem problem(p1, p2, cfg.sigma, cfg.lambda);
  return detail::ascend(problem, start, cfg, trace);
}

/// Every starting transform sup_ck uses: principal-axis candidates first, then random rotations.
inline std::vector<RigidTransform> alignment_starts(const AtomCloud& p1, const AtomCloud& p2,
                                                    const AlignConfig& cfg) {
  std::vector<RigidTransform> starts = initial_transforms(p1, p2, cfg.axis_similarity_ratio);
  const auto extra = random_transforms(p1, p2, cfg.extra_random_starts, cfg.seed);
  starts.insert(starts.end(), extra.begin(), extra.end());
  return starts;
}

/// Best local maximum over the given starts; ties keep the lowest start index.
inline AlignResult sup_ck(const AtomCloud& p1, const AtomCloud& p2, const AlignConfig& cfg,
                          const std::vector<RigidTransform>& starts) {
  cfg.validate();
  if (starts.empty()) throw ParameterError("sup_ck needs at least one starting transform");
  const detail::AlignmentProblem problem(p1, p2, cfg.sigma, cfg.lambda);
  AlignResult best;
  bool have = false;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    AlignResult r = detail::ascend(problem, starts[k], cfg, nullptr);
    r.start_index = static_cast<int>(k);
    if (!have || r.score > best.score) {
      best = r;
      have = true;
    }
  }
  return best;
}

inline AlignResult sup_ck(const AtomCloud& p1, const AtomCloud& p2, const AlignConfig& cfg) {
  cfg.validate();
  return sup_ck(p1, p2, cfg, alignment_starts(p1, p2, cfg));
}

}  // namespace supck
