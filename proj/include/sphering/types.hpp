#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sphering {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Warnings attached to a result instead of being printed.
using Warnings = std::vector<std::string>;

/// Two-class column partition. Both index sets are sorted and 0-based.
struct ClassLabels {
  std::vector<Index> class1;
  std::vector<Index> class2;

  /// First n1 columns are class one, the next n2 class two.
  static ClassLabels contiguous(Index n1, Index n2);

  Index n1() const { return static_cast<Index>(class1.size()); }
  Index n2() const { return static_cast<Index>(class2.size()); }
  Index n() const { return n1() + n2(); }

  /// 1/n1 + 1/n2
  double c_n() const { return 1.0 / static_cast<double>(n1()) + 1.0 / static_cast<double>(n2()); }

  /// Per-column class tag: 0 for class one, 1 for class two.
  std::vector<std::uint8_t> tags() const;
  static ClassLabels from_tags(const std::vector<std::uint8_t>& tags);

  /// Throws ParameterError unless the sets partition {0..n-1}.
  void validate(Index n) const;

  /// Throws DegenerateError unless each class has at least two columns.
  void require_pooled_variance() const;

  bool operator==(const ClassLabels&) const = default;
};

/// An m x n real matrix with optional two-class column labels.
class DataMatrix {
public:
  DataMatrix() = default;
  explicit DataMatrix(Matrix values);
  DataMatrix(Matrix values, ClassLabels labels);

  const Matrix& values() const { return values_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

  bool has_labels() const { return labels_.has_value(); }
  /// Throws ParameterError when the matrix carries no labels.
  const ClassLabels& labels() const;
  const std::optional<ClassLabels>& maybe_labels() const { return labels_; }

private:
  Matrix values_;
  std::optional<ClassLabels> labels_;
};

}  // namespace sphering
