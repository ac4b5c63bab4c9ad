#pragma once

// Brute-force reference implementations. None of these call into gr_core
// algorithms; they only share the plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "gr/simstore/store.hpp"
#include "gr/telemetry/types.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
// descending order with unit eigenvectors as columns of `vectors`.
struct Eigensystem {
  std::vector<double> values;
  Matrix vectors;  // vectors[i][j]: component i of eigenvector j
};

inline Eigensystem jacobi_eigen(Matrix a) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eigensystem out;
  out.vectors.assign(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    out.values.push_back(a[order[j]][order[j]]);
    for (std::size_t i = 0; i < n; ++i) out.vectors[i][j] = v[i][order[j]];
  }
  return out;
}

// Covariance-eigendecomposition PCA over rows of `x`.
struct Pca {
  std::vector<double> mean;
  std::vector<std::vector<double>> axes;  // unit rows, largest-magnitude entry >= 0
  std::vector<double> ratios;             // explained-variance ratio per axis
};

inline Pca pca(const Matrix& x) {
  const std::size_t n = x.size(), d = x[0].size();
  Pca out;
  out.mean.assign(d, 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += r[j] / static_cast<double>(n);
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i][j] += (r[i] - out.mean[i]) * (r[j] - out.mean[j]) / static_cast<double>(n - 1);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov[i][i];
  const auto eig = jacobi_eigen(cov);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> axis(d);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < d; ++i) {
      axis[i] = eig.vectors[i][j];
      if (std::abs(axis[i]) > std::abs(axis[arg])) arg = i;
    }
    if (axis[arg] < 0)
      for (auto& v : axis) v = -v;
    out.axes.push_back(axis);
    out.ratios.push_back(eig.values[j] / trace);
  }
  return out;
}

inline std::vector<double> project(const Pca& p, const std::vector<double>& x, std::size_t k) {
  std::vector<double> z(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < x.size(); ++i) z[c] += p.axes[c][i] * (x[i] - p.mean[i]);
  return z;
}

// Most frequent grade, ties to TP, then FP, then BP.
inline std::optional<gr::Grade> majority(const std::vector<gr::Grade>& grades) {
  if (grades.empty()) return std::nullopt;
  std::size_t tp = 0, fp = 0, bp = 0;
  for (auto g : grades) (g == gr::Grade::TP ? tp : g == gr::Grade::FP ? fp : bp)++;
  if (tp >= fp && tp >= bp) return gr::Grade::TP;
  if (fp >= bp) return gr::Grade::FP;
  return gr::Grade::BP;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Exhaustive scan: filter, label each candidate, sort by (kind, score desc,
// timestamp desc, id), keep k_max.
inline std::vector<gr::SimilarMatch> similar(const std::vector<gr::EmbeddingEntry>& all, const gr::SimilarQuery& q) {
  std::vector<gr::SimilarMatch> out;
  for (const auto& e : all) {
    if (e.org_id != q.org_id || e.incident_id == q.incident_id) continue;
    if (e.timestamp < q.now - q.horizon) continue;
    const std::optional<gr::Grade> g = e.grade ? e.grade : e.predicted_grade;
    if (e.incident_hash == q.incident_hash) {
      out.push_back({e.incident_id,
                     (q.grade_rec && g == q.grade_rec) ? gr::MatchKind::ExactHashSameGrade : gr::MatchKind::ExactHashAnyGrade, 1.0,
                     e.timestamp});
    } else {
      const double s = cosine(e.embedding, q.embedding);
      if (s >= q.cutoff) out.push_back({e.incident_id, gr::MatchKind::Cosine, s, e.timestamp});
    }
  }
  std::sort(out.begin(), out.end(), [](const gr::SimilarMatch& a, const gr::SimilarMatch& b) {
    return std::make_tuple(static_cast<int>(a.kind), -a.score, -a.timestamp.time_since_epoch().count(), a.incident_id) <
           std::make_tuple(static_cast<int>(b.kind), -b.score, -b.timestamp.time_since_epoch().count(), b.incident_id);
  });
  if (out.size() > q.k_max) out.resize(q.k_max);
  return out;
}

// For one class: try every distinct score as a threshold, ascending, and
// return the first whose emitted precision reaches the target.
struct Scored {
  std::uint32_t predicted;
  double score;
  std::uint32_t label;
};

inline std::optional<double> threshold(const std::vector<Scored>& preds, std::uint32_t cls, double target) {
  std::vector<double> candidates;
  for (const auto& p : preds)
    if (p.predicted == cls) candidates.push_back(p.score);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (double t : candidates) {
    std::size_t emitted = 0, correct = 0;
    for (const auto& p : preds) {
      if (p.predicted == cls && p.score >= t) {
        ++emitted;
        correct += p.label == cls;
      }
    }
    if (emitted > 0 && static_cast<double>(correct) / static_cast<double>(emitted) >= target) return t;
  }
  return std::nullopt;
}

}  // namespace oracle
