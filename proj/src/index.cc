#include "aeenc/index.h"

#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

#include "aeenc/errors.h"

namespace aeenc {

std::size_t PremiseIndex::zero_rows() const {
  std::size_t n = 0;
  for (char z : zero_) n += z ? 1 : 0;
  return n;
}

Vector PremiseIndex::Row(std::size_t i) const {
  if (!sparse_) {
    return Vector(dense_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                  dense_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
  }
  Vector out(dim_, 0.0);
  for (std::size_t p = csr_.offsets[i]; p < csr_.offsets[i + 1]; ++p) {
    out[csr_.index[p]] = csr_.value[p];
  }
  return out;
}

void PremiseIndex::Score(std::span<const double> unit_query,
                         std::span<double> out, Execution exec) const {
  if (sparse_) {
    if (exec == Execution::kParallel) {
      kernels::ScoreSparse(csr_, unit_query, out);
    } else {
      kernels::ScoreSparseSerial(csr_, unit_query, out);
    }
  } else if (exec == Execution::kParallel) {
    kernels::ScoreDense(dense_, dim_, unit_query, out);
  } else {
    kernels::ScoreDenseSerial(dense_, dim_, unit_query, out);
  }
}

namespace {

// Normalizes in place; returns false for the zero vector.
bool Normalize(Vector& v) {
  const double n = Norm(v);
  if (n == 0.0) return false;
  for (double& x : v) x /= n;
  return true;
}

void EncodeDense(const std::vector<Fact>& facts,
                 const EncoderStack& stack, std::vector<double>& dense,
                 std::vector<char>& zero, Execution exec) {
  const std::size_t dim = stack.dim();
  dense.assign(facts.size() * dim, 0.0);
  zero.assign(facts.size(), 0);
  std::exception_ptr error;
  std::mutex error_mu;
  auto encode_one = [&](std::size_t i) {
    try {
      Vector v = stack.Encode(facts[i], EncodeSide::kPremise);
      if (!Normalize(v)) {
        zero[i] = 1;
        return;
      }
      std::copy(v.begin(), v.end(),
                dense.begin() + static_cast<std::ptrdiff_t>(i * dim));
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  const auto n = static_cast<std::int64_t>(facts.size());
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) encode_one(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n; ++i) encode_one(static_cast<std::size_t>(i));
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

PremiseIndex BuildIndex(const EncoderStack& stack, const Corpus& corpus,
                        Execution exec) {
  PremiseIndex index;
  index.facts_ = std::make_shared<const std::vector<Fact>>(corpus.facts());
  index.ids_.reserve(corpus.size());
  for (const auto& f : corpus.facts()) index.ids_.push_back(f.id);
  index.dim_ = stack.dim();
  index.identity_rows_ = stack.premise_adapter().is_identity();
  if (index.identity_rows_ && stack.base().tfidf() != nullptr) {
    index.sparse_ = true;
    index.zero_.assign(corpus.size(), 0);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const SparseVector v = stack.base().tfidf()->EncodeSparse(corpus.facts()[i].tokens);
      if (v.index.empty()) index.zero_[i] = 1;
      index.csr_.Append(v);
    }
  } else {
    EncodeDense(*index.facts_, stack, index.dense_, index.zero_, exec);
  }
  return index;
}

PremiseIndex Refresh(const PremiseIndex& index, const EncoderStack& stack,
                     Execution exec) {
  if (index.identity_rows_ && stack.premise_adapter().is_identity()) {
    PremiseIndex copy = index;
    ++copy.generation_;
    return copy;
  }
  PremiseIndex next;
  next.facts_ = index.facts_;
  next.ids_ = index.ids_;
  next.dim_ = stack.dim();
  next.identity_rows_ = stack.premise_adapter().is_identity();
  next.generation_ = index.generation_ + 1;
  EncodeDense(*next.facts_, stack, next.dense_, next.zero_, exec);
  return next;
}

std::vector<ScoredFact> RetrieveTopK(const PremiseIndex& index,
                                     std::span<const double> query_vector,
                                     std::string_view query_id,
                                     const RetrieveOptions& options) {
  if (options.k == 0) throw std::invalid_argument("retrieval needs k >= 1");
  Vector q(query_vector.begin(), query_vector.end());
  std::vector<double> scores(index.size(), 0.0);
  if (Normalize(q)) index.Score(q, scores, options.exec);
  std::vector<char> skip;
  if (options.exclude_self) {
    skip.assign(index.size(), 0);
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (index.ids()[i] == query_id) skip[i] = 1;
    }
  }
  const auto top = kernels::SelectTopK(scores, index.ids(), options.k, skip);
  std::vector<ScoredFact> out;
  out.reserve(top.size());
  for (std::size_t i : top) out.push_back({index.ids()[i], scores[i]});
  return out;
}

std::vector<ScoredFact> RetrieveTopK(const PremiseIndex& index,
                                     const EncoderStack& stack,
                                     const Fact& query,
                                     const RetrieveOptions& options) {
  const Vector q = stack.Encode(query, EncodeSide::kQuery);
  return RetrieveTopK(index, q, query.id, options);
}

}  // namespace aeenc
