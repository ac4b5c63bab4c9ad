#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gr/reduce/feature_matrix.hpp"

namespace gr {

struct PcaOptions {
  std::size_t max_components = 40;
  double variance_target = 0.95;
  // Inputs at most this wide use an exact covariance eigendecomposition;
  // wider inputs use seeded block subspace iteration on the implicit covariance.
  std::size_t dense_solver_limit = 2000;
  std::uint64_t seed = 0;
};

enum class SubjectKind : std::uint8_t { Alert, Incident };

struct Embedding {
  std::vector<double> values;
  SubjectKind kind = SubjectKind::Incident;
  std::string subject_id;
};

// Centered (unscaled) principal axes. Rows of the component matrix are
// orthonormal; the largest-magnitude entry of each row is non-negative.
class PcaModel {
 public:
  PcaModel() = default;
  PcaModel(Eigen::VectorXd mean, Eigen::MatrixXd components, std::vector<double> explained_variance,
           double total_variance);

  std::size_t components() const { return static_cast<std::size_t>(components_.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(mean_.size()); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& component_matrix() const { return components_; }
  const std::vector<double>& explained_variance() const { return explained_variance_; }
  std::vector<double> explained_variance_ratio() const;
  double total_variance() const { return total_variance_; }
  double captured_ratio() const;

  // components * (x - mean). Throws DimensionError naming both sizes.
  std::vector<double> transform(std::span<const double> x) const;
  std::vector<double> transform(const SparseVector& x) const;
  Embedding embed(std::span<const double> x, SubjectKind kind, std::string subject_id) const;
  std::vector<double> inverse_transform(std::span<const double> z) const;

  std::string serialize() const;
  static PcaModel parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static PcaModel load(const std::filesystem::path& path);

  // SHA-256 of the serialized model; identifies the embedding space.
  std::string digest() const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;  // k x d
  Eigen::VectorXd projected_mean_;
  std::vector<double> explained_variance_;
  double total_variance_ = 0.0;
};

// Keeps components until variance_target of the total variance is captured
// or max_components is reached, whichever comes first. Throws DataError for
// fewer than two rows or zero total variance.
PcaModel fit_pca(const FeatureMatrix& samples, const PcaOptions& options = {});
PcaModel fit_pca(const Eigen::MatrixXd& samples, const PcaOptions& options = {});

}  // namespace gr
