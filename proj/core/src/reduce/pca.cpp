#include "gr/reduce/pca.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "gr/common/digest.hpp"
#include "gr/common/error.hpp"
#include "gr/common/random.hpp"
#include "gr/common/text_io.hpp"

namespace gr {
namespace {

constexpr std::string_view kMagic = "gr-pca 1";

Eigen::VectorXd column_means(const FeatureMatrix& x) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.cols()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) sum[r.indices[k]] += r.values[k];
  }
  return sum / static_cast<double>(x.rows());
}

// Sample covariance via the sparse Gram matrix: (X^T X - n mu mu^T) / (n - 1).
Eigen::MatrixXd covariance(const FeatureMatrix& x, const Eigen::VectorXd& mean) {
  const auto d = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t a = 0; a < r.indices.size(); ++a) {
      const double va = r.values[a];
      double* col = gram.col(r.indices[a]).data();
      for (std::size_t b = 0; b <= a; ++b) col[r.indices[b]] += va * r.values[b];
    }
  }
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd cov = gram.selfadjointView<Eigen::Upper>();
  cov.noalias() -= n * mean * mean.transpose();
  cov /= (n - 1.0);
  return cov;
}

double total_variance_of(const FeatureMatrix& x, const Eigen::VectorXd& mean) {
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(mean.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) sq[r.indices[k]] += r.values[k] * r.values[k];
  }
  const double n = static_cast<double>(x.rows());
  return (sq.sum() - n * mean.squaredNorm()) / (n - 1.0);
}

// Y = Cov * Q without materializing Cov.
Eigen::MatrixXd apply_covariance(const FeatureMatrix& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& q) {
  const auto l = q.cols();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(q.rows(), l);
  Eigen::RowVectorXd xq(l);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    xq.setZero();
    for (std::size_t k = 0; k < r.indices.size(); ++k) xq.noalias() += r.values[k] * q.row(r.indices[k]);
    for (std::size_t k = 0; k < r.indices.size(); ++k) y.row(r.indices[k]).noalias() += r.values[k] * xq;
  }
  const double n = static_cast<double>(x.rows());
  y.noalias() -= n * mean * (mean.transpose() * q);
  y /= (n - 1.0);
  return y;
}

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns
};

EigenPairs dense_eigen(const FeatureMatrix& x, const Eigen::VectorXd& mean) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance(x, mean));
  if (solver.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
  EigenPairs out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

EigenPairs subspace_eigen(const FeatureMatrix& x, const Eigen::VectorXd& mean, std::size_t wanted,
                          std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(x.cols());
  const auto block = static_cast<Eigen::Index>(std::min<std::size_t>(wanted + 10, x.cols()));
  Rng rng(splitmix64(seed));
  Eigen::MatrixXd q(d, block);
  for (Eigen::Index j = 0; j < block; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) q(i, j) = uniform_unit(rng) - 0.5;
  }
  q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() * Eigen::MatrixXd::Identity(d, block);

  Eigen::VectorXd previous = Eigen::VectorXd::Zero(block);
  EigenPairs out;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd y = apply_covariance(x, mean, q);
    Eigen::MatrixXd small = q.transpose() * y;
    small = 0.5 * (small + small.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small);
    out.values = solver.eigenvalues().reverse();
    out.vectors = q * solver.eigenvectors().rowwise().reverse();
    const auto head = static_cast<Eigen::Index>(wanted);
    const double scale = std::max(std::abs(out.values[0]), 1e-300);
    const double change = (out.values.head(head) - previous.head(head)).cwiseAbs().maxCoeff() / scale;
    previous = out.values;
    if (iter > 2 && change < 1e-13) break;
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() * Eigen::MatrixXd::Identity(d, block);
  }
  return out;
}

void write_vector(std::ostream& out, const std::string& label, const double* data, Eigen::Index n) {
  out << label;
  for (Eigen::Index i = 0; i < n; ++i) out << ' ' << format_double(data[i]);
  out << '\n';
}

}  // namespace

PcaModel::PcaModel(Eigen::VectorXd mean, Eigen::MatrixXd components, std::vector<double> explained_variance,
                   double total_variance)
    : mean_(std::move(mean)),
      components_(std::move(components)),
      explained_variance_(std::move(explained_variance)),
      total_variance_(total_variance) {
  if (components_.cols() != mean_.size()) {
    throw DimensionError(
        fmt::format("component width {} does not match mean length {}", components_.cols(), mean_.size()));
  }
  if (static_cast<std::size_t>(components_.rows()) != explained_variance_.size()) {
    throw DimensionError("one explained variance per component required");
  }
  projected_mean_ = components_ * mean_;
}

std::vector<double> PcaModel::explained_variance_ratio() const {
  std::vector<double> ratio;
  ratio.reserve(explained_variance_.size());
  for (double v : explained_variance_) ratio.push_back(total_variance_ > 0 ? v / total_variance_ : 0.0);
  return ratio;
}

double PcaModel::captured_ratio() const {
  double sum = 0.0;
  for (double r : explained_variance_ratio()) sum += r;
  return sum;
}

std::vector<double> PcaModel::transform(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw DimensionError(
        fmt::format("PCA input has dimension {}, model expects {}", x.size(), input_dim()));
  }
  Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd z = components_ * (v - mean_);
  return {z.data(), z.data() + z.size()};
}

std::vector<double> PcaModel::transform(const SparseVector& x) const {
  if (!x.indices.empty() && x.indices.back() >= input_dim()) {
    throw DimensionError(fmt::format("PCA input index {} outside model dimension {}", x.indices.back(), input_dim()));
  }
  Eigen::VectorXd z = -projected_mean_;
  for (std::size_t k = 0; k < x.indices.size(); ++k) z.noalias() += x.values[k] * components_.col(x.indices[k]);
  return {z.data(), z.data() + z.size()};
}

Embedding PcaModel::embed(std::span<const double> x, SubjectKind kind, std::string subject_id) const {
  return {transform(x), kind, std::move(subject_id)};
}

std::vector<double> PcaModel::inverse_transform(std::span<const double> z) const {
  if (z.size() != components()) {
    throw DimensionError(fmt::format("embedding has dimension {}, model has {} components", z.size(), components()));
  }
  Eigen::Map<const Eigen::VectorXd> v(z.data(), static_cast<Eigen::Index>(z.size()));
  Eigen::VectorXd x = components_.transpose() * v + mean_;
  return {x.data(), x.data() + x.size()};
}

std::string PcaModel::serialize() const {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "input_dim " << input_dim() << '\n';
  out << "components " << components() << '\n';
  out << "total_variance " << format_double(total_variance_) << '\n';
  write_vector(out, "explained", explained_variance_.data(), static_cast<Eigen::Index>(explained_variance_.size()));
  write_vector(out, "mean", mean_.data(), mean_.size());
  for (Eigen::Index i = 0; i < components_.rows(); ++i) {
    Eigen::VectorXd row = components_.row(i).transpose();
    write_vector(out, "axis", row.data(), row.size());
  }
  return std::move(out).str();
}

PcaModel PcaModel::parse(std::string_view text) {
  auto lines = split(text, '\n');
  std::size_t pos = 0;
  auto fields = [&](std::string_view key) {
    if (pos >= lines.size()) throw SchemaError("PCA bundle truncated");
    auto parts = split(lines[pos++], ' ');
    if (parts.empty() || parts[0] != key) throw SchemaError(fmt::format("PCA bundle: expected '{}'", key));
    parts.erase(parts.begin());
    return parts;
  };
  if (pos >= lines.size() || lines[pos++] != kMagic) throw SchemaError("not a PCA bundle (bad magic)");
  const auto d = static_cast<Eigen::Index>(parse_int(fields("input_dim").at(0)));
  const auto k = static_cast<Eigen::Index>(parse_int(fields("components").at(0)));
  const double total = parse_double(fields("total_variance").at(0));
  auto read_values = [&](std::string_view key, Eigen::Index expected) {
    auto parts = fields(key);
    if (static_cast<Eigen::Index>(parts.size()) != expected) {
      throw SchemaError(fmt::format("PCA bundle: '{}' has {} values, expected {}", key, parts.size(), expected));
    }
    std::vector<double> v;
    v.reserve(parts.size());
    for (auto p : parts) v.push_back(parse_double(p));
    return v;
  };
  auto explained = read_values("explained", k);
  auto mean_values = read_values("mean", d);
  Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd>(mean_values.data(), d);
  Eigen::MatrixXd comps(k, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    auto row = read_values("axis", d);
    comps.row(i) = Eigen::Map<Eigen::RowVectorXd>(row.data(), d);
  }
  return PcaModel(std::move(mean), std::move(comps), std::move(explained), total);
}

void PcaModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

PcaModel PcaModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string PcaModel::digest() const { return sha256_hex(serialize()); }

PcaModel fit_pca(const FeatureMatrix& samples, const PcaOptions& options) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 2) throw DataError(fmt::format("PCA needs at least 2 samples, got {}", n));
  if (d == 0) throw DataError("PCA input has no columns");
  if (options.max_components == 0) throw ConfigError("max_components must be >= 1");

  const Eigen::VectorXd mean = column_means(samples);
  const double total = total_variance_of(samples, mean);
  if (!(total > 0.0)) throw DataError("PCA input has zero total variance");

  const std::size_t cap = std::min({options.max_components, n, d});
  EigenPairs pairs = d <= options.dense_solver_limit ? dense_eigen(samples, mean)
                                                     : subspace_eigen(samples, mean, cap, options.seed);

  std::size_t k = 0;
  double captured = 0.0;
  const double floor = total * 1e-12;
  while (k < cap && pairs.values[static_cast<Eigen::Index>(k)] > floor) {
    captured += pairs.values[static_cast<Eigen::Index>(k)];
    ++k;
    if (captured / total >= options.variance_target) break;
  }
  if (k == 0) throw DataError("PCA found no component with positive variance");

  Eigen::MatrixXd components(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  std::vector<double> explained(k);
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd axis = pairs.vectors.col(static_cast<Eigen::Index>(i));
    axis.normalize();
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < 0) axis = -axis;
    components.row(static_cast<Eigen::Index>(i)) = axis.transpose();
    explained[i] = pairs.values[static_cast<Eigen::Index>(i)];
  }
  return PcaModel(mean, std::move(components), std::move(explained), total);
}

PcaModel fit_pca(const Eigen::MatrixXd& samples, const PcaOptions& options) {
  return fit_pca(FeatureMatrix::from_dense(samples), options);
}

}  // namespace gr
