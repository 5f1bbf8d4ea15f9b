#include "aeenc/kernels.h"

#include <algorithm>
#include <numeric>

#include <omp.h>

namespace aeenc::kernels {

void CsrRows::Append(const SparseVector& v) {
  index.insert(index.end(), v.index.begin(), v.index.end());
  value.insert(value.end(), v.value.begin(), v.value.end());
  offsets.push_back(index.size());
}

namespace {

inline double RowDot(const double* row, const double* q, std::size_t dim) {
  double s = 0.0;
  for (std::size_t c = 0; c < dim; ++c) s += row[c] * q[c];
  return s;
}

inline double SparseDot(const CsrRows& rows, std::size_t r, const double* q) {
  double s = 0.0;
  for (std::size_t p = rows.offsets[r]; p < rows.offsets[r + 1]; ++p) {
    s += rows.value[p] * q[rows.index[p]];
  }
  return s;
}

}  // namespace

void ScoreDense(std::span<const double> rows, std::size_t dim,
                std::span<const double> query, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(out.size());
  const double* base = rows.data();
  const double* q = query.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        RowDot(base + static_cast<std::size_t>(i) * dim, q, dim);
  }
}

void ScoreDenseSerial(std::span<const double> rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = RowDot(rows.data() + i * dim, query.data(), dim);
  }
}

void ScoreSparse(const CsrRows& rows, std::span<const double> query,
                 std::span<double> out) {
  const auto n = static_cast<std::int64_t>(rows.rows());
  const double* q = query.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        SparseDot(rows, static_cast<std::size_t>(i), q);
  }
}

void ScoreSparseSerial(const CsrRows& rows, std::span<const double> query,
                       std::span<double> out) {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    out[i] = SparseDot(rows, i, query.data());
  }
}

std::vector<std::size_t> SelectTopK(std::span<const double> scores,
                                    std::span<const std::string> ids,
                                    std::size_t k, std::span<const char> skip) {
  std::vector<std::size_t> order;
  order.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (skip.empty() || !skip[i]) order.push_back(i);
  }
  k = std::min(k, order.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), better);
  order.resize(k);
  return order;
}

void AccumulateOuter(Matrix& grad, std::span<const OuterTerm> terms) {
  const auto rows = static_cast<std::int64_t>(grad.rows());
  const std::size_t cols = grad.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    double* g = grad.row(ur).data();
    for (const OuterTerm& t : terms) {
      const double a = t.scale * t.u[ur];
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) g[c] += a * t.x[c];
    }
  }
}

void AccumulateOuterSerial(Matrix& grad, std::span<const OuterTerm> terms) {
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    double* g = grad.row(r).data();
    for (const OuterTerm& t : terms) {
      const double a = t.scale * t.u[r];
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < grad.cols(); ++c) g[c] += a * t.x[c];
    }
  }
}

int MaxThreads() { return omp_get_max_threads(); }

}  // namespace aeenc::kernels
