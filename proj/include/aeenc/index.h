#ifndef AEENC_INDEX_H_
#define AEENC_INDEX_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/kernels.h"

namespace aeenc {

struct ScoredFact {
  std::string fact_id;
  double score = 0.0;

  friend bool operator==(const ScoredFact&, const ScoredFact&) = default;
};

// Flat exact-search index over premise-side encodings, L2-normalized.
// Tf-idf bases with an untouched premise adapter are stored sparse; every
// other configuration is stored as dense rows.
class PremiseIndex {
 public:
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::uint64_t generation() const { return generation_; }
  bool is_sparse() const { return sparse_; }
  std::size_t dim() const { return dim_; }
  bool is_zero(std::size_t i) const { return zero_[i] != 0; }
  std::size_t zero_rows() const;

  // Dense copy of the stored unit row.
  Vector Row(std::size_t i) const;

  // Inner products of every stored row with `unit_query`.
  void Score(std::span<const double> unit_query, std::span<double> out,
             Execution exec = Execution::kParallel) const;

  friend PremiseIndex BuildIndex(const EncoderStack&, const Corpus&, Execution);
  friend PremiseIndex Refresh(const PremiseIndex&, const EncoderStack&, Execution);

 private:
  std::shared_ptr<const std::vector<Fact>> facts_;
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  bool sparse_ = false;
  bool identity_rows_ = false;
  std::vector<double> dense_;
  kernels::CsrRows csr_;
  std::vector<char> zero_;
  std::uint64_t generation_ = 0;
};

// One entry per corpus fact in corpus order; generation 0. Encoding
// failures propagate as LookupError naming the fact.
PremiseIndex BuildIndex(const EncoderStack& stack, const Corpus& corpus,
                        Execution exec = Execution::kParallel);

// Re-encodes every entry with the stack's current premise adapter and bumps
// the generation. An identity premise adapter reuses the stored rows.
PremiseIndex Refresh(const PremiseIndex& index, const EncoderStack& stack,
                     Execution exec = Execution::kParallel);

struct RetrieveOptions {
  std::size_t k = 20;
  bool exclude_self = false;
  Execution exec = Execution::kParallel;
};

// The k highest cosine scores between the query-side encoding and the index
// entries, descending, ties broken by ascending fact id.
std::vector<ScoredFact> RetrieveTopK(const PremiseIndex& index,
                                     const EncoderStack& stack,
                                     const Fact& query,
                                     const RetrieveOptions& options);

// Same, starting from an already encoded query-side vector.
std::vector<ScoredFact> RetrieveTopK(const PremiseIndex& index,
                                     std::span<const double> query_vector,
                                     std::string_view query_id,
                                     const RetrieveOptions& options);

}  // namespace aeenc

#endif  // AEENC_INDEX_H_
