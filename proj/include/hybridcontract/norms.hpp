#pragma once
// Vector norms, induced matrix norms, and matrix measures (logarithmic norms)
// for the 1/2/inf families with optional positive diagonal weights.
//
// Conventions:
//   weighted norm      |x|_{w,p} = |diag(w) x|_p
//   induced norm       ||M||     = sup_x |M x|_out / |x|_in
//   matrix measure     mu(A)     = lim_{h->0+} (||I + hA|| - 1) / h
// Weighted cases reduce to unweighted ones by conjugation with diag(w).

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "hybridcontract/errors.hpp"

namespace hybridcontract {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Row = Eigen::RowVectorXd;

enum class NormKind { One, Two, Inf };

[[nodiscard]] inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::One: return "one";
    case NormKind::Two: return "two";
    case NormKind::Inf: return "inf";
  }
  return "?";
}

struct NormSpec {
  NormKind kind = NormKind::Two;
  Vec weights;  // empty = unweighted; else strictly positive, one per dim

  [[nodiscard]] static NormSpec one() { return {NormKind::One, {}}; }
  [[nodiscard]] static NormSpec two() { return {NormKind::Two, {}}; }
  [[nodiscard]] static NormSpec inf() { return {NormKind::Inf, {}}; }
  [[nodiscard]] static NormSpec weighted(NormKind k, Vec w) {
    return {k, std::move(w)};
  }

  [[nodiscard]] bool is_weighted() const { return weights.size() > 0; }

  friend bool operator==(const NormSpec& a, const NormSpec& b) {
    return a.kind == b.kind && a.weights.size() == b.weights.size() &&
           (a.weights.size() == 0 || a.weights == b.weights);
  }
  friend bool operator!=(const NormSpec& a, const NormSpec& b) {
    return !(a == b);
  }
};

inline void validate_norm_spec(const NormSpec& spec, Eigen::Index dim) {
  if (spec.is_weighted()) {
    if (spec.weights.size() != dim)
      throw DimensionMismatch("norm weights size " +
                              std::to_string(spec.weights.size()) +
                              " does not match dimension " +
                              std::to_string(dim));
    if ((spec.weights.array() <= 0.0).any())
      throw InvalidArgument("norm weights must be strictly positive");
  }
}

namespace detail {

[[nodiscard]] inline double p_norm(const Vec& x, NormKind k) {
  switch (k) {
    case NormKind::One: return x.lpNorm<1>();
    case NormKind::Two: return x.norm();
    case NormKind::Inf: return x.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

// W_out * M * W_in^{-1}; the induced norm and measure of the weighted pair
// equal the unweighted ones of this conjugated matrix.
[[nodiscard]] inline Mat weight_conjugate(const Mat& M, const NormSpec& out,
                                          const NormSpec& in) {
  Mat B = M;
  if (out.is_weighted()) B = out.weights.asDiagonal() * B;
  if (in.is_weighted()) B = B * in.weights.cwiseInverse().asDiagonal();
  return B;
}

[[nodiscard]] inline double same_kind_operator_norm(const Mat& B, NormKind k) {
  switch (k) {
    case NormKind::One: return B.cwiseAbs().colwise().sum().maxCoeff();
    case NormKind::Inf: return B.cwiseAbs().rowwise().sum().maxCoeff();
    case NormKind::Two: {
      Eigen::JacobiSVD<Mat> svd(B);
      return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    }
  }
  return 0.0;
}

}  // namespace detail

[[nodiscard]] inline double vector_norm(const Vec& x, const NormSpec& spec) {
  validate_norm_spec(spec, x.size());
  if (spec.is_weighted())
    return detail::p_norm(spec.weights.cwiseProduct(x), spec.kind);
  return detail::p_norm(x, spec.kind);
}

struct InducedNorm {
  double value = 0.0;
  // True for same-kind pairs (closed form); false for the sampled lower
  // bound used on mixed-kind pairs, which must not back a certificate.
  bool exact = true;
};

struct MixedNormOptions {
  int samples = 10000;
  std::uint64_t seed = 0;
};

[[nodiscard]] inline InducedNorm induced_norm(
    const Mat& M, const NormSpec& out_spec, const NormSpec& in_spec,
    const MixedNormOptions& mixed = {}) {
  validate_norm_spec(out_spec, M.rows());
  validate_norm_spec(in_spec, M.cols());
  if (out_spec.kind == in_spec.kind) {
    const Mat B = detail::weight_conjugate(M, out_spec, in_spec);
    return {detail::same_kind_operator_norm(B, out_spec.kind), true};
  }

  // Mixed-kind pairs have no closed form in general; sample a lower bound
  // over random directions plus every signed basis vector.
  const auto ratio = [&](const Vec& x) {
    const double denom = vector_norm(x, in_spec);
    return denom > 0.0 ? vector_norm(M * x, out_spec) / denom : 0.0;
  };
  double best = 0.0;
  Vec e = Vec::Zero(M.cols());
  for (Eigen::Index i = 0; i < M.cols(); ++i) {
    e.setZero();
    e(i) = 1.0;
    best = std::max(best, ratio(e));
    e(i) = -1.0;
    best = std::max(best, ratio(e));
  }
  std::mt19937_64 rng(mixed.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec x(M.cols());
  for (int s = 0; s < mixed.samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);
    best = std::max(best, ratio(x));
  }
  return {best, false};
}

[[nodiscard]] inline double matrix_measure(const Mat& A,
                                           const NormSpec& spec) {
  if (A.rows() != A.cols())
    throw DimensionMismatch("matrix measure requires a square matrix");
  validate_norm_spec(spec, A.rows());
  const Mat B = detail::weight_conjugate(A, spec, spec);
  double mu = 0.0;
  switch (spec.kind) {
    case NormKind::One: {
      mu = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < B.cols(); ++j) {
        double col = B(j, j);
        for (Eigen::Index i = 0; i < B.rows(); ++i)
          if (i != j) col += std::abs(B(i, j));
        mu = std::max(mu, col);
      }
      break;
    }
    case NormKind::Inf: {
      mu = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < B.rows(); ++i) {
        double row = B(i, i);
        for (Eigen::Index j = 0; j < B.cols(); ++j)
          if (j != i) row += std::abs(B(i, j));
        mu = std::max(mu, row);
      }
      break;
    }
    case NormKind::Two: {
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (B + B.transpose()));
      mu = es.eigenvalues().maxCoeff();
      break;
    }
  }
#ifndef NDEBUG
  {
    // One-sided-limit consistency; the remainder of the difference quotient
    // is O(h·||A||^2), hence the scale guard.
    const double h = 1e-6;
    const Mat I = Mat::Identity(A.rows(), A.cols());
    const double quotient =
        (induced_norm(I + h * A, spec, spec).value - 1.0) / h;
    assert(std::abs(mu - quotient) <= 1e-4 * (1.0 + A.squaredNorm()));
  }
#endif
  return mu;
}

}  // namespace hybridcontract
