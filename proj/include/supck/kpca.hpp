#pragma once

// Kernel PCA on a similarity matrix that need not be positive semidefinite.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "supck/eval.hpp"

namespace supck {

struct Projection {
  std::vector<std::string> ids;
  std::vector<std::string> classes;
  Eigen::MatrixXd coordinates;  // N x d
  std::vector<double> eigenvalues;  // positive, descending
  double discarded_negative_mass = 0.0;
  bool fewer_components = false;  // fewer positive eigenvalues than requested
  bool symmetrized = true;
  bool centered = true;
};

/// Symmetrize, double-center, and keep the `dims` largest positive
/// eigenvalues; coordinates are eigenvectors scaled by sqrt(eigenvalue). Each
/// component is signed so its largest-magnitude coordinate is positive.
inline Projection kpca_project(const SimilarityMatrix& m, int dims) {
  m.validate();
  if (m.orientation != Orientation::Similarity) throw InputError("kernel PCA needs a similarity matrix");
  if (dims < 1) throw ParameterError("dims must be >= 1");
  const Eigen::Index n = m.scores.rows();
  if (n == 0) throw InputError("empty matrix");

  const Eigen::MatrixXd sym = 0.5 * (m.scores + m.scores.transpose());
  const Eigen::VectorXd row_mean = sym.rowwise().mean();
  const Eigen::VectorXd col_mean = sym.colwise().mean().transpose();
  const double grand = sym.mean();
  Eigen::MatrixXd centered = sym;
  centered.colwise() -= row_mean;
  centered.rowwise() -= col_mean.transpose();
  centered.array() += grand;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending

  const double scale = values.cwiseAbs().maxCoeff();
  const double zero = 1e-10 * std::max(scale, 1e-300);
  double negative = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(values(i)) <= zero) continue;
    total += std::abs(values(i));
    if (values(i) < 0.0) negative += -values(i);
  }

  Projection p;
  p.ids = m.ids;
  p.classes = m.classes;
  p.discarded_negative_mass = total > 0.0 ? negative / total : 0.0;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = n - 1; i >= 0 && static_cast<int>(kept.size()) < dims; --i)
    if (values(i) > zero) kept.push_back(i);
  p.fewer_components = static_cast<int>(kept.size()) < dims;
  p.coordinates.resize(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const double lambda = values(kept[c]);
    Eigen::VectorXd v = eig.eigenvectors().col(kept[c]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    p.coordinates.col(static_cast<Eigen::Index>(c)) = v * std::sqrt(lambda);
    p.eigenvalues.push_back(lambda);
  }
  return p;
}

}  // namespace supck
