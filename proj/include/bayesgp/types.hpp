#pragma once

#include <bayesgp/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace bayesgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Bounds {
  double low = 0.0;
  double high = 1.0;

  double width() const noexcept { return high - low; }
  bool contains(double x) const noexcept { return x >= low && x <= high; }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Per-dimension (min, max) of the columns of `inputs`.
inline std::vector<Bounds> column_ranges(const Matrix& inputs) {
  std::vector<Bounds> out(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = {inputs.col(j).minCoeff(), inputs.col(j).maxCoeff()};
  }
  return out;
}

/// Training data for a zero-mean GP. Outputs are centered on construction and
/// the subtracted mean is kept in `output_offset()`.
class Dataset {
 public:
  Dataset(Matrix inputs, const Vector& outputs, std::vector<Bounds> bounds = {},
          bool scaled = false)
      : inputs_(std::move(inputs)), bounds_(std::move(bounds)), scaled_(scaled) {
    if (inputs_.rows() < 1 || inputs_.cols() < 1) {
      throw DimensionMismatch("dataset needs at least one row and one column");
    }
    if (outputs.size() != inputs_.rows()) {
      throw DimensionMismatch("dataset has " + std::to_string(inputs_.rows()) +
                              " input rows but " + std::to_string(outputs.size()) +
                              " outputs");
    }
    if (!inputs_.allFinite() || !outputs.allFinite()) {
      throw Error("dataset contains non-finite values");
    }
    if (bounds_.empty()) bounds_ = column_ranges(inputs_);
    if (bounds_.size() != static_cast<std::size_t>(inputs_.cols())) {
      throw DimensionMismatch("bounds count does not match input dimension");
    }
    for (Eigen::Index j = 0; j < inputs_.cols(); ++j) {
      const Bounds& b = bounds_[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
        if (!b.contains(inputs_(i, j))) {
          throw Error("input (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") lies outside its bounds");
        }
      }
    }
    output_offset_ = outputs.mean();
    outputs_ = outputs.array() - output_offset_;
  }

  const Matrix& inputs() const noexcept { return inputs_; }
  const Vector& outputs() const noexcept { return outputs_; }
  Vector raw_outputs() const { return outputs_.array() + output_offset_; }
  double output_offset() const noexcept { return output_offset_; }
  const std::vector<Bounds>& bounds() const noexcept { return bounds_; }
  bool scaled() const noexcept { return scaled_; }

  std::size_t n() const noexcept { return static_cast<std::size_t>(inputs_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }

 private:
  Matrix inputs_;
  Vector outputs_;
  double output_offset_ = 0.0;
  std::vector<Bounds> bounds_;
  bool scaled_ = false;
};

/// Anisotropic kernel lengthscales; every component strictly positive and finite.
class Lengthscales {
 public:
  explicit Lengthscales(Vector theta) : theta_(std::move(theta)) {
    if (theta_.size() < 1) throw DimensionMismatch("lengthscales must be non-empty");
    for (Eigen::Index i = 0; i < theta_.size(); ++i) {
      if (!std::isfinite(theta_[i]) || theta_[i] <= 0.0) {
        throw Error("lengthscale " + std::to_string(i) + " must be positive and finite, got " +
                    std::to_string(theta_[i]));
      }
    }
  }

  static Lengthscales constant(std::size_t d, double value) {
    return Lengthscales(Vector::Constant(static_cast<Eigen::Index>(d), value));
  }

  double operator[](std::size_t i) const { return theta_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(theta_.size()); }
  const Vector& values() const noexcept { return theta_; }

  /// Copy with component `i` replaced.
  Lengthscales with(std::size_t i, double value) const {
    Vector next = theta_;
    next[static_cast<Eigen::Index>(i)] = value;
    return Lengthscales(std::move(next));
  }

  friend bool operator==(const Lengthscales& a, const Lengthscales& b) {
    return a.theta_.size() == b.theta_.size() && a.theta_ == b.theta_;
  }

 private:
  Vector theta_;
};

struct GPConfig {
  double jitter = 1e-8;
};

}  // namespace bayesgp
