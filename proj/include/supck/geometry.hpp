#pragma once

// Atom clouds, rigid transforms and the Gaussian convolution kernel between
// two clouds, together with its analytic gradient over rigid motions.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "supck/error.hpp"

namespace supck {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Label bandwidth meaning "labels ignored".
inline constexpr double kNoLabels = std::numeric_limits<double>::infinity();

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct AtomMeta {
  std::string res_name;
  int res_seq = 0;
  std::string atom_name;
  std::string chain;
};

struct Atom {
  Vec3 position = Vec3::Zero();
  double label = 0.0;  // partial charge, e
  std::string element;
  AtomMeta meta;
};

/// Ordered, non-empty set of atoms with distinct positions.
class AtomCloud {
 public:
  AtomCloud() = default;

  explicit AtomCloud(std::vector<Atom> atoms, std::string id = {},
                     std::optional<std::string> ligand_class = std::nullopt)
      : atoms_(std::move(atoms)), id_(std::move(id)), ligand_class_(std::move(ligand_class)) {
    if (atoms_.empty()) throw InputError("atom cloud '" + id_ + "' has no atoms");
    positions_.resize(3, static_cast<Eigen::Index>(atoms_.size()));
    labels_.resize(static_cast<Eigen::Index>(atoms_.size()));
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& a = atoms_[i];
      if (!a.position.allFinite())
        throw InputError("atom cloud '" + id_ + "': non-finite position at atom " + std::to_string(i));
      if (!std::isfinite(a.label))
        throw InputError("atom cloud '" + id_ + "': non-finite label at atom " + std::to_string(i));
      positions_.col(static_cast<Eigen::Index>(i)) = a.position;
      labels_(static_cast<Eigen::Index>(i)) = a.label;
    }
    check_distinct();
  }

  /// Convenience constructor for unlabeled geometry.
  static AtomCloud from_positions(const std::vector<Vec3>& points, std::string id = {},
                                  std::optional<std::string> ligand_class = std::nullopt) {
    std::vector<Atom> atoms(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) atoms[i].position = points[i];
    return AtomCloud(std::move(atoms), std::move(id), std::move(ligand_class));
  }

  static AtomCloud from_labeled_positions(const std::vector<Vec3>& points, const std::vector<double>& labels,
                                          std::string id = {},
                                          std::optional<std::string> ligand_class = std::nullopt) {
    if (labels.size() != points.size()) throw InputError("label count does not match point count");
    std::vector<Atom> atoms(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      atoms[i].position = points[i];
      atoms[i].label = labels[i];
    }
    return AtomCloud(std::move(atoms), std::move(id), std::move(ligand_class));
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }
  const std::string& id() const noexcept { return id_; }
  const std::optional<std::string>& ligand_class() const noexcept { return ligand_class_; }
  void set_id(std::string id) { id_ = std::move(id); }
  void set_ligand_class(std::optional<std::string> c) { ligand_class_ = std::move(c); }

  /// 3 x N matrix of coordinates.
  const Eigen::Matrix3Xd& positions() const noexcept { return positions_; }
  const Eigen::VectorXd& labels() const noexcept { return labels_; }

  bool has_nonzero_labels() const { return (labels_.array() != 0.0).any(); }

 private:
  void check_distinct() const {
    std::vector<std::size_t> order(atoms_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto key = [this](std::size_t i) {
      const Vec3& p = atoms_[i].position;
      return std::array<double, 3>{p.x(), p.y(), p.z()};
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (key(order[k - 1]) == key(order[k]))
        throw InputError("atom cloud '" + id_ + "': atoms " + std::to_string(order[k - 1]) + " and " +
                         std::to_string(order[k]) + " share identical positions");
    }
  }

  std::vector<Atom> atoms_;
  std::string id_;
  std::optional<std::string> ligand_class_;
  Eigen::Matrix3Xd positions_;
  Eigen::VectorXd labels_;
};

/// Rotation R = R_X(phi) R_Y(theta) R_Z(psi) followed by a translation:
/// y -> R y + translation.
struct RigidTransform {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static Vec6 to_vector(const RigidTransform& t) {
    Vec6 v;
    v << t.phi, t.theta, t.psi, t.translation;
    return v;
  }

  static RigidTransform from_vector(const Vec6& v) {
    return {v(0), v(1), v(2), v.tail<3>()};
  }
};

inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

namespace detail {

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, s, 0, -s, c;
  return m;
}
inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, -s, 0, 1, 0, s, 0, c;
  return m;
}
inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, s, 0, -s, c, 0, 0, 0, 1;
  return m;
}
inline Mat3 d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 0, 0, 0, 0, -s, c, 0, -c, -s;
  return m;
}
inline Mat3 d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, 0, -c, 0, 0, 0, c, 0, -s;
  return m;
}
inline Mat3 d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, c, 0, -c, -s, 0, 0, 0, 0;
  return m;
}

}  // namespace detail

inline Mat3 rotation_matrix(double phi, double theta, double psi) {
  return detail::rot_x(phi) * detail::rot_y(theta) * detail::rot_z(psi);
}

inline Mat3 rotation_matrix(const RigidTransform& t) { return rotation_matrix(t.phi, t.theta, t.psi); }

/// Partial derivatives of the rotation with respect to (phi, theta, psi).
inline std::array<Mat3, 3> rotation_derivatives(const RigidTransform& t) {
  const Mat3 rx = detail::rot_x(t.phi), ry = detail::rot_y(t.theta), rz = detail::rot_z(t.psi);
  return {detail::d_rot_x(t.phi) * ry * rz, rx * detail::d_rot_y(t.theta) * rz,
          rx * ry * detail::d_rot_z(t.psi)};
}

/// Euler angles (phi, theta, psi) in [0, 2pi) reproducing a proper rotation matrix.
inline std::array<double, 3> euler_angles(const Mat3& r) {
  // r = [[ct cp, ct sp, -st], [.., .., sf ct], [.., .., cf ct]]
  const double ct = std::hypot(r(0, 0), r(0, 1));
  const double theta = std::atan2(-r(0, 2), ct);
  double phi = 0.0, psi = 0.0;
  if (ct > 1e-12) {
    psi = std::atan2(r(0, 1), r(0, 0));
    phi = std::atan2(r(1, 2), r(2, 2));
  } else {
    // gimbal lock: fix psi = 0, then r(1,0) = sin(phi) sin(theta), r(1,1) = cos(phi)
    phi = std::atan2(r(1, 0) * (std::sin(theta) < 0 ? -1.0 : 1.0), r(1, 1));
  }
  return {wrap_angle(phi), wrap_angle(theta), wrap_angle(psi)};
}

inline RigidTransform transform_from_matrix(const Mat3& r, const Vec3& translation) {
  const auto [phi, theta, psi] = euler_angles(r);
  return {phi, theta, psi, translation};
}

/// Rigid motion applied to every atom; labels and metadata are kept.
inline AtomCloud apply_transform(const RigidTransform& t, const AtomCloud& cloud) {
  const Mat3 r = rotation_matrix(t);
  std::vector<Atom> atoms = cloud.atoms();
  for (Atom& a : atoms) a.position = r * a.position + t.translation;
  return AtomCloud(std::move(atoms), cloud.id(), cloud.ligand_class());
}

inline void check_kernel_parameters(double sigma, double lambda) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ParameterError("sigma must be a positive finite number, got " + std::to_string(sigma));
  if (!(lambda > 0.0))
    throw ParameterError("lambda must be positive or infinite, got " + std::to_string(lambda));
}

struct KernelValueGradient {
  double value = 0.0;
  Vec6 gradient = Vec6::Zero();  // angles (or rotation vector) first, then translation
};

/// The objective sum_ij w_ij exp(-|x_i - (R y_j + t)|^2 / (2 sigma^2)) with
/// label weights w_ij = exp(-(l_i - l_j)^2 / lambda) fixed at construction.
class KernelObjective {
 public:

  KernelObjective(const Eigen::Matrix3Xd& fixed, const Eigen::VectorXd& fixed_labels,
                  const Eigen::Matrix3Xd& moving, const Eigen::VectorXd& moving_labels, double sigma,
                  double lambda)
      : x_(fixed), xs_(fixed.row(0).transpose()), ys_(fixed.row(1).transpose()), zs_(fixed.row(2).transpose()),
        y_(moving), sigma_(sigma) {
    check_kernel_parameters(sigma, lambda);
    if (x_.cols() == 0 || y_.cols() == 0) throw InputError("kernel requires non-empty clouds");
    inv_two_sigma2_ = 1.0 / (2.0 * sigma * sigma);
    if (std::isfinite(lambda)) {
      weights_.resize(x_.cols(), y_.cols());
      for (Eigen::Index j = 0; j < y_.cols(); ++j)
        for (Eigen::Index i = 0; i < x_.cols(); ++i) {
          const double dl = fixed_labels(i) - moving_labels(j);
          weights_(i, j) = std::exp(-dl * dl / lambda);
        }
    }
  }

  KernelObjective(const AtomCloud& fixed, const AtomCloud& moving, double sigma, double lambda)
      : KernelObjective(fixed.positions(), fixed.labels(), moving.positions(), moving.labels(), sigma,
                        lambda) {}

  /// Replace the label weights with an explicit matrix (rows: fixed atoms).
  void set_weights(Eigen::MatrixXd w) {
    if (w.rows() != x_.cols() || w.cols() != y_.cols()) throw InputError("weight matrix shape mismatch");
    weights_ = std::move(w);
  }

  bool labeled() const noexcept { return weights_.size() != 0; }
  double sigma() const noexcept { return sigma_; }
  Eigen::Index fixed_size() const noexcept { return x_.cols(); }
  Eigen::Index moving_size() const noexcept { return y_.cols(); }

  double value(const RigidTransform& t) const { return value(rotation_matrix(t), t.translation); }

  double value(const Mat3& r, const Vec3& translation) const {
    return accumulate<false>(r, translation).value;
  }

  /// Value and gradient with respect to (phi, theta, psi, t).
  KernelValueGradient value_and_gradient(const RigidTransform& t) const {
    const Sums s = accumulate<true>(rotation_matrix(t), t.translation);
    const double inv_s2 = 1.0 / (sigma_ * sigma_);
    const auto dr = rotation_derivatives(t);
    KernelValueGradient out;
    out.value = s.value;
    for (int k = 0; k < 3; ++k)
      out.gradient(k) = s.moment.cwiseProduct(dr[static_cast<std::size_t>(k)]).sum() * inv_s2;
    out.gradient.tail<3>() = s.grad_t * inv_s2;
    return out;
  }

  /// Value and gradient with respect to (w, t) for the rotation exp([w]x) r
  /// at w = 0, i.e. a rotation of the moved cloud about the origin.
  KernelValueGradient local_value_and_gradient(const Mat3& r, const Vec3& translation) const {
    const Sums s = accumulate<true>(r, translation);
    const double inv_s2 = 1.0 / (sigma_ * sigma_);
    // torque sum_j (r y_j) x a_j from A = sum_j a_j (r y_j)^T
    const Mat3 m = s.moment * r.transpose();
    KernelValueGradient out;
    out.value = s.value;
    out.gradient.head<3>() = Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * inv_s2;
    out.gradient.tail<3>() = s.grad_t * inv_s2;
    return out;
  }

 private:
  Eigen::Matrix3Xd x_;
  Eigen::ArrayXd xs_, ys_, zs_;  // fixed coordinates, one array per axis
  Eigen::Matrix3Xd y_;
  Eigen::MatrixXd weights_;
  double sigma_;
  double inv_two_sigma2_ = 0.0;

  struct Sums {
    double value = 0.0;
    Vec3 grad_t = Vec3::Zero();  // sum_ij e_ij r_ij
    Mat3 moment = Mat3::Zero();  // sum_ij e_ij r_ij y_j^T
  };

  template <bool WithGradient>
  Sums accumulate(const Mat3& r, const Vec3& translation) const {
    const bool w = labeled();
    Eigen::ArrayXd dx(x_.cols()), dy(x_.cols()), dz(x_.cols()), e(x_.cols());
    Sums s;
    for (Eigen::Index j = 0; j < y_.cols(); ++j) {
      const Vec3 y = y_.col(j);
      const Vec3 z = r * y + translation;
      dx = xs_ - z.x();
      dy = ys_ - z.y();
      dz = zs_ - z.z();
      e = (-(dx.square() + dy.square() + dz.square()) * inv_two_sigma2_).exp();
      if (w) e *= weights_.col(j).array();
      s.value += e.sum();
      if constexpr (WithGradient) {
        const Vec3 a((e * dx).sum(), (e * dy).sum(), (e * dz).sum());
        s.grad_t += a;
        s.moment.noalias() += a * y.transpose();
      }
    }
    return s;
  }
};

/// Convolution kernel between p1 and p2 moved by t; lambda = kNoLabels ignores labels.
inline double kernel_ck(const AtomCloud& p1, const AtomCloud& p2, const RigidTransform& t, double sigma,
                        double lambda = kNoLabels) {
  return KernelObjective(p1, p2, sigma, lambda).value(t);
}

inline Vec6 kernel_gradient(const AtomCloud& p1, const AtomCloud& p2, const RigidTransform& t, double sigma,
                            double lambda = kNoLabels) {
  return KernelObjective(p1, p2, sigma, lambda).value_and_gradient(t).gradient;
}

/// Squared feature-space distance K(P1,P1) + K(P2,P2) - 2 K(P1,P2), unlabeled, at identity.
inline double ck_distance(const AtomCloud& p1, const AtomCloud& p2, double sigma) {
  const RigidTransform id;
  const double k11 = kernel_ck(p1, p1, id, sigma);
  const double k22 = kernel_ck(p2, p2, id, sigma);
  const double k12 = kernel_ck(p1, p2, id, sigma);
  return std::max(0.0, k11 + k22 - 2.0 * k12);
}

/// sqrt(ck_distance): the feature-space norm of the difference, which obeys
/// the triangle inequality (ck_distance itself is its square and need not).
inline double ck_metric(const AtomCloud& p1, const AtomCloud& p2, double sigma) {
  return std::sqrt(ck_distance(p1, p2, sigma));
}

struct EllipsoidSummary {
  Vec3 centroid = Vec3::Zero();
  std::array<double, 3> axis_lengths{};  // descending
  Mat3 axis_directions = Mat3::Identity();  // columns, right-handed
  double volume = 0.0;
};

inline Vec3 centroid(const AtomCloud& p) { return p.positions().rowwise().mean(); }

/// Inertia ellipsoid: axes along covariance eigenvectors, lengths sqrt(3 * eigenvalue).
inline EllipsoidSummary ellipsoid_summary(const AtomCloud& p) {
  EllipsoidSummary s;
  s.centroid = centroid(p);
  const Eigen::Matrix3Xd centered = p.positions().colwise() - s.centroid;
  const Mat3 cov = centered * centered.transpose() / static_cast<double>(p.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  // eigenvalues ascending; reverse to descending
  for (int k = 0; k < 3; ++k) {
    const double ev = std::max(0.0, eig.eigenvalues()(2 - k));
    s.axis_lengths[static_cast<std::size_t>(k)] = std::sqrt(3.0 * ev);
    s.axis_directions.col(k) = eig.eigenvectors().col(2 - k);
  }
  // canonical signs: positive third moment along the first two axes, third
  // axis completes a right-handed frame
  for (int k = 0; k < 2; ++k) {
    const Eigen::RowVectorXd proj = s.axis_directions.col(k).transpose() * centered;
    if (proj.array().cube().sum() < 0.0) s.axis_directions.col(k) *= -1.0;
  }
  s.axis_directions.col(2) = s.axis_directions.col(0).cross(s.axis_directions.col(1));
  s.volume = 4.0 / 3.0 * std::numbers::pi * s.axis_lengths[0] * s.axis_lengths[1] * s.axis_lengths[2];
  return s;
}

}  // namespace supck
