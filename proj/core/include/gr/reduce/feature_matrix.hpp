#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gr {

// Strictly increasing indices with their non-zero values.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::vector<double> to_dense(std::size_t dim) const;
};

struct SparseRowView {
  std::span<const std::uint32_t> indices;
  std::span<const double> values;
};

// Row-compressed sample matrix; rows mix one-hot indicators with dense
// engineered features, so storage is sparse throughout.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) { row_ptr_.push_back(0); }

  // Indices must be strictly increasing and < cols(); throws DimensionError otherwise.
  void add_row(std::span<const std::uint32_t> indices, std::span<const double> values);
  void add_row(const SparseVector& row) { add_row(row.indices, row.values); }
  void add_dense_row(std::span<const double> values);

  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t non_zeros() const { return values_.size(); }
  SparseRowView row(std::size_t i) const;

  static FeatureMatrix from_dense(const Eigen::MatrixXd& dense);
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t cols_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

}  // namespace gr
