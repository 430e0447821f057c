#pragma once

// Pocket similarity measures built on top of the alignment: sup-CK and its
// labeled variant, the ellipsoid baselines (Vol, Princ-Axis), the overlap
// (Poisson) index after superposition, and the sup-CK / Vol combination.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "supck/align.hpp"
#include "supck/matching.hpp"

namespace supck {

enum class MeasureKind { SupCk, SupCkL, Vol, PrincAxis, SupPi, SupCkVol, SupCkLVol };

enum class Orientation { Similarity, Dissimilarity };

inline constexpr std::array<MeasureKind, 7> kAllMeasureKinds{MeasureKind::SupCk,    MeasureKind::SupCkL,
                                                            MeasureKind::Vol,      MeasureKind::PrincAxis,
                                                            MeasureKind::SupPi,    MeasureKind::SupCkVol,
                                                            MeasureKind::SupCkLVol};

inline std::string_view to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::SupCk: return "sup-ck";
    case MeasureKind::SupCkL: return "sup-ck-l";
    case MeasureKind::Vol: return "vol";
    case MeasureKind::PrincAxis: return "princ-axis";
    case MeasureKind::SupPi: return "sup-pi";
    case MeasureKind::SupCkVol: return "sup-ck-vol";
    case MeasureKind::SupCkLVol: return "sup-ck-l-vol";
  }
  return "?";
}

inline std::string_view to_string(Orientation o) {
  return o == Orientation::Similarity ? "similarity" : "dissimilarity";
}

inline MeasureKind parse_measure_kind(std::string_view name) {
  for (MeasureKind k : kAllMeasureKinds)
    if (to_string(k) == name) return k;
  throw ParameterError("unknown measure '" + std::string(name) + "'");
}

inline Orientation parse_orientation(std::string_view name) {
  if (name == "similarity") return Orientation::Similarity;
  if (name == "dissimilarity") return Orientation::Dissimilarity;
  throw InputError("unknown orientation '" + std::string(name) + "'");
}

inline Orientation orientation_of(MeasureKind k) {
  return (k == MeasureKind::Vol || k == MeasureKind::PrincAxis) ? Orientation::Dissimilarity
                                                                : Orientation::Similarity;
}

inline bool uses_labels(MeasureKind k) { return k == MeasureKind::SupCkL || k == MeasureKind::SupCkLVol; }

inline bool uses_alignment(MeasureKind k) {
  return k != MeasureKind::Vol && k != MeasureKind::PrincAxis;
}

inline bool uses_volume(MeasureKind k) { return k == MeasureKind::SupCkVol || k == MeasureKind::SupCkLVol; }

struct MeasureConfig {
  MeasureKind kind = MeasureKind::SupCk;
  AlignConfig align;
  double overlap_tolerance = 1.0;  // Angstrom
  double alpha = 0.0;

  Orientation orientation() const { return orientation_of(kind); }

  /// Alignment settings actually used: unlabeled kinds force lambda = infinity.
  AlignConfig effective_align() const {
    AlignConfig a = align;
    if (!uses_labels(kind)) a.lambda = kNoLabels;
    return a;
  }

  void validate() const {
    effective_align().validate();
    if (!(overlap_tolerance > 0.0)) throw ParameterError("overlap_tolerance must be positive");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be a finite value >= 0");
  }
};

/// |Vol(P1) - Vol(P2)| of the inertia ellipsoids.
inline double vol_score(const AtomCloud& p1, const AtomCloud& p2) {
  return std::abs(ellipsoid_summary(p1).volume - ellipsoid_summary(p2).volume);
}

inline double princ_axis_score(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Sum of squared differences of the sorted principal-axis lengths.
inline double princ_axis_score(const AtomCloud& p1, const AtomCloud& p2) {
  return princ_axis_score(ellipsoid_summary(p1).axis_lengths, ellipsoid_summary(p2).axis_lengths);
}

struct OverlapResult {
  double index = 0.0;        // L / (N1 + N2 - L)
  std::size_t overlap = 0;   // L
  RigidTransform transform;  // superposition used for counting
};

inline double poisson_index(std::size_t overlap, std::size_t n1, std::size_t n2) {
  const double l = static_cast<double>(overlap);
  return l / (static_cast<double>(n1) + static_cast<double>(n2) - l);
}

inline std::size_t overlap_count(const AtomCloud& p1, const AtomCloud& p2, const RigidTransform& t,
                                 double tolerance) {
  const Eigen::Matrix3Xd moved = (rotation_matrix(t) * p2.positions()).colwise() + t.translation;
  return overlap_count(p1.positions(), moved, tolerance);
}

inline constexpr std::size_t kOverlapAnchors = 3;

/// Overlap index after sup-CK superposition and a sharpened-kernel refinement.
/// The refinement ascends with sigma = tolerance / 2 from the sup-CK transform
/// and from a few anchored copies of it, each shifted so that one close but
/// non-overlapping pair coincides. Centroid-matched superpositions of
/// point-symmetric clouds are saddles the plain ascent cannot leave.
inline OverlapResult sup_pi_detail(const AtomCloud& p1, const AtomCloud& p2, const MeasureConfig& cfg) {
  if (!(cfg.overlap_tolerance > 0.0)) throw ParameterError("overlap_tolerance must be positive");
  const double tol = cfg.overlap_tolerance;
  AlignConfig coarse = cfg.align;
  coarse.lambda = kNoLabels;
  const AlignResult aligned = sup_ck(p1, p2, coarse);

  AlignConfig sharp = coarse;
  sharp.sigma = tol / 2.0;

  std::vector<RigidTransform> seeds{aligned.transform};
  {
    const Eigen::Matrix3Xd& x = p1.positions();
    const Eigen::Matrix3Xd y =
        (rotation_matrix(aligned.transform) * p2.positions()).colwise() + aligned.transform.translation;
    // nearest transformed partner of each P1 atom, outside the tolerance
    std::vector<std::pair<double, Vec3>> anchors;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      Eigen::Index best = 0;
      const double d = (y.colwise() - x.col(i)).colwise().squaredNorm().minCoeff(&best);
      if (std::sqrt(d) > tol) anchors.emplace_back(d, Vec3(x.col(i) - y.col(best)));
    }
    std::stable_sort(anchors.begin(), anchors.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < std::min(anchors.size(), kOverlapAnchors); ++k) {
      RigidTransform t = aligned.transform;
      t.translation += anchors[k].second;
      seeds.push_back(t);
    }
  }

  OverlapResult out;
  out.overlap = overlap_count(p1, p2, aligned.transform, tol);
  out.transform = aligned.transform;
  for (const RigidTransform& seed : seeds) {
    const AlignResult refined = gradient_ascent(p1, p2, seed, sharp);
    const std::size_t l = overlap_count(p1, p2, refined.transform, tol);
    if (l > out.overlap) {
      out.overlap = l;
      out.transform = refined.transform;
    }
  }
  out.index = poisson_index(out.overlap, p1.size(), p2.size());
  return out;
}

inline double sup_pi(const AtomCloud& p1, const AtomCloud& p2, const MeasureConfig& cfg) {
  return sup_pi_detail(p1, p2, cfg).index;
}

/// sup-CK score minus alpha times the volume difference.
inline double combined_ck_vol(const AtomCloud& p1, const AtomCloud& p2, const MeasureConfig& cfg) {
  if (!(cfg.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
  const double ck = sup_ck(p1, p2, cfg.effective_align()).score;
  return ck - cfg.alpha * vol_score(p1, p2);
}

struct MeasureOutcome {
  double score = 0.0;
  std::optional<RigidTransform> transform;  // present for alignment-based measures
};

inline MeasureOutcome evaluate_measure(const AtomCloud& p1, const AtomCloud& p2, const MeasureConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case MeasureKind::Vol: return {vol_score(p1, p2), std::nullopt};
    case MeasureKind::PrincAxis: return {princ_axis_score(p1, p2), std::nullopt};
    case MeasureKind::SupPi: {
      const OverlapResult r = sup_pi_detail(p1, p2, cfg);
      return {r.index, r.transform};
    }
    case MeasureKind::SupCk:
    case MeasureKind::SupCkL:
    case MeasureKind::SupCkVol:
    case MeasureKind::SupCkLVol: {
      const AlignResult r = sup_ck(p1, p2, cfg.effective_align());
      double score = r.score;
      if (uses_volume(cfg.kind)) score -= cfg.alpha * vol_score(p1, p2);
      return {score, r.transform};
    }
  }
  throw ParameterError("unhandled measure kind");
}

inline double measure(const AtomCloud& p1, const AtomCloud& p2, const MeasureConfig& cfg) {
  return evaluate_measure(p1, p2, cfg).score;
}

}  // namespace supck
