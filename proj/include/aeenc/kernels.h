#ifndef AEENC_KERNELS_H_
#define AEENC_KERNELS_H_

// Data-parallel inner loops. Each OpenMP kernel has a serial reference with
// the same signature; both must produce bitwise-identical results because
// every output element is computed by exactly one thread in a fixed order.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aeenc/encoder.h"

namespace aeenc {

enum class Execution { kParallel, kSerial };

namespace kernels {

// Compressed sparse rows.
struct CsrRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t rows() const { return offsets.size() - 1; }
  void Append(const SparseVector& v);
};

// out[i] = <rows[i], query> for a dense row-major block of width dim.
void ScoreDense(std::span<const double> rows, std::size_t dim,
                std::span<const double> query, std::span<double> out);
void ScoreDenseSerial(std::span<const double> rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out);

void ScoreSparse(const CsrRows& rows, std::span<const double> query,
                 std::span<double> out);
void ScoreSparseSerial(const CsrRows& rows, std::span<const double> query,
                       std::span<double> out);

// Positions of the k best scores ordered by descending score, ties broken by
// ascending ids[i]. `skip` marks positions to leave out (may be empty).
std::vector<std::size_t> SelectTopK(std::span<const double> scores,
                                    std::span<const std::string> ids,
                                    std::size_t k,
                                    std::span<const char> skip = {});

// One rank-one term scale * u x^T of a gradient sum.
struct OuterTerm {
  const double* u;
  const double* x;
  double scale;
};

// grad += sum_t scale_t * u_t x_t^T, summed in term order for every entry.
void AccumulateOuter(Matrix& grad, std::span<const OuterTerm> terms);
void AccumulateOuterSerial(Matrix& grad, std::span<const OuterTerm> terms);

int MaxThreads();

}  // namespace kernels
}  // namespace aeenc

#endif  // AEENC_KERNELS_H_
