#include "gr/reduce/feature_matrix.hpp"

#include <fmt/format.h>

#include "gr/common/error.hpp"

namespace gr {

std::vector<double> SparseVector::to_dense(std::size_t dim) const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dim) throw DimensionError(fmt::format("index {} outside dimension {}", indices[i], dim));
    out[indices[i]] = values[i];
  }
  return out;
}

void FeatureMatrix::add_row(std::span<const std::uint32_t> indices, std::span<const double> values) {
  if (indices.size() != values.size()) throw DimensionError("row index/value length mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= cols_ || (i > 0 && indices[i] <= indices[i - 1])) {
      throw DimensionError(fmt::format("row index {} invalid for {} columns (must be increasing)", indices[i], cols_));
    }
  }
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  values_.insert(values_.end(), values.begin(), values.end());
  row_ptr_.push_back(values_.size());
}

void FeatureMatrix::add_dense_row(std::span<const double> values) {
  if (values.size() != cols_) {
    throw DimensionError(fmt::format("dense row has {} values, matrix has {} columns", values.size(), cols_));
  }
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] != 0.0) {
      indices_.push_back(static_cast<std::uint32_t>(j));
      values_.push_back(values[j]);
    }
  }
  row_ptr_.push_back(values_.size());
}

SparseRowView FeatureMatrix::row(std::size_t i) const {
  const auto begin = row_ptr_[i];
  const auto len = row_ptr_[i + 1] - begin;
  return {std::span<const std::uint32_t>(indices_.data() + begin, len),
          std::span<const double>(values_.data() + begin, len)};
}

FeatureMatrix FeatureMatrix::from_dense(const Eigen::MatrixXd& dense) {
  FeatureMatrix m(static_cast<std::size_t>(dense.cols()));
  std::vector<double> row(static_cast<std::size_t>(dense.cols()));
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j < dense.cols(); ++j) row[static_cast<std::size_t>(j)] = dense(i, j);
    m.add_dense_row(row);
  }
  return m;
}

Eigen::MatrixXd FeatureMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows(); ++i) {
    const auto r = row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      out(static_cast<Eigen::Index>(i), r.indices[k]) = r.values[k];
    }
  }
  return out;
}

}  // namespace gr
