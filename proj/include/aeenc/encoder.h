#ifndef AEENC_ENCODER_H_
#define AEENC_ENCODER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aeenc/corpus.h"

namespace aeenc {

using Vector = std::vector<double>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> v);
Vector MatVec(const Matrix& m, std::span<const double> v);
// Frobenius distance to the identity matrix.
double DistanceToIdentity(const Matrix& m);

struct Similarity {
  double score = 0.0;
  // Set when either input is the zero vector; score is then 0.
  bool degenerate = false;
};

// Cosine of the angle between u and v.
Similarity CosineScore(std::span<const double> u, std::span<const double> v);

// Row-per-fact embedding table aligned with an id list.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws std::invalid_argument on shape mismatch, duplicate id or a
  // non-finite value.
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                  std::vector<double> values);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> Find(std::string_view id) const;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// "EMB v1 <count> <dim>" header followed by one row per line, plus a
// separate id-per-line file. Errors carry the offending line number.
EmbeddingMatrix LoadEmbeddings(const std::filesystem::path& vectors_path,
                               const std::filesystem::path& ids_path);
EmbeddingMatrix ParseEmbeddings(std::string_view vectors, std::string_view ids);
void SaveEmbeddings(const EmbeddingMatrix& m,
                    const std::filesystem::path& vectors_path,
                    const std::filesystem::path& ids_path);
// Shortest round-trip decimal text for the vectors file.
std::string FormatEmbeddingVectors(const EmbeddingMatrix& m);

struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

// Vocabulary and idf table fitted on a corpus; encodes arbitrary token
// lists. Tokens outside the vocabulary are ignored.
class TfidfModel {
 public:
  // Throws std::invalid_argument on an empty corpus.
  explicit TfidfModel(const Corpus& corpus);

  std::size_t dim() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  double idf(std::size_t term) const { return idf_[term]; }
  std::optional<std::size_t> TermIndex(std::string_view token) const;

  // L2-normalized tf-idf weights with raw-count tf and smoothed idf
  // ln((1+N)/(1+df)) + 1.
  SparseVector EncodeSparse(const std::vector<std::string>& tokens) const;
  Vector Encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, std::size_t> term_index_;
  std::vector<double> idf_;
};

EmbeddingMatrix TfidfEncode(const Corpus& corpus);

// Frozen embedding provider: either a fitted tf-idf model (can embed any
// text) or an imported embedding table (id lookup only).
class BaseEncoder {
 public:
  static std::shared_ptr<const BaseEncoder> FromTfidf(const Corpus& corpus);
  static std::shared_ptr<const BaseEncoder> FromEmbeddings(EmbeddingMatrix m);

  std::size_t dim() const;
  bool text_capable() const { return tfidf_ != nullptr; }
  const TfidfModel* tfidf() const { return tfidf_.get(); }
  const EmbeddingMatrix* table() const { return table_.get(); }

  // Throws LookupError for an unknown id on an import-only base.
  Vector Embed(const Fact& fact) const;
  bool CanEmbed(const Fact& fact) const;

 private:
  std::shared_ptr<const TfidfModel> tfidf_;
  std::shared_ptr<const EmbeddingMatrix> table_;
};

// Trainable square linear map x -> W x (+ b).
class Adapter {
 public:
  Adapter() = default;
  static Adapter Identity(std::size_t dim, bool trainable = true,
                          bool with_bias = false);

  std::size_t dim() const { return dim_; }
  bool trainable() const { return trainable_; }
  bool has_bias() const { return with_bias_; }
  // True until the weights are first mutated; identity adapters apply as an
  // exact copy without materializing dim x dim storage.
  bool is_identity() const { return !weights_.has_value() && bias_.empty(); }

  // Dense copy of W (identity when untouched).
  Matrix Weights() const;
  // Materializes W on first use.
  Matrix& mutable_weights();
  std::span<const double> bias() const { return bias_; }
  std::span<double> mutable_bias();
  void SetWeights(Matrix w);

  Vector Apply(std::span<const double> x) const;

  friend bool operator==(const Adapter& a, const Adapter& b);

 private:
  std::size_t dim_ = 0;
  bool trainable_ = true;
  bool with_bias_ = false;
  std::optional<Matrix> weights_;
  std::vector<double> bias_;
};

enum class EncoderMode { kSingle, kSiamese, kDual };
enum class EncodeSide { kQuery, kPremise, kFixed };

std::string_view ModeName(EncoderMode mode);
EncoderMode ParseMode(std::string_view name);

// Base provider plus query/premise adapters. Single mode freezes the
// premise adapter at identity; siamese mode uses one adapter for both
// sides. The fixed side is the base provider itself.
class EncoderStack {
 public:
  EncoderStack(std::shared_ptr<const BaseEncoder> base, EncoderMode mode,
               bool with_bias = false);

  EncoderMode mode() const { return mode_; }
  std::size_t dim() const { return base_->dim(); }
  const BaseEncoder& base() const { return *base_; }
  std::shared_ptr<const BaseEncoder> base_ptr() const { return base_; }

  const Adapter& query_adapter() const { return adapters_[0]; }
  const Adapter& premise_adapter() const { return adapters_[premise_slot()]; }
  Adapter& mutable_query_adapter() { return adapters_[0]; }
  // Single mode: the frozen identity. Mutating it is a contract violation.
  Adapter& mutable_premise_adapter() { return adapters_[premise_slot()]; }
  bool shares_adapter() const { return mode_ == EncoderMode::kSiamese; }

  Vector Encode(const Fact& fact, EncodeSide side) const;
  Vector Apply(std::span<const double> base_vector, EncodeSide side) const;

  // Writes mode.json, query.emb and (dual only) premise.emb into dir.
  void Save(const std::filesystem::path& dir) const;
  // Restores adapters saved by Save onto this stack's base.
  static EncoderStack Load(const std::filesystem::path& dir,
                           std::shared_ptr<const BaseEncoder> base);

 private:
  std::size_t premise_slot() const { return mode_ == EncoderMode::kSiamese ? 0 : 1; }

  std::shared_ptr<const BaseEncoder> base_;
  EncoderMode mode_;
  std::vector<Adapter> adapters_;
};

}  // namespace aeenc

#endif  // AEENC_ENCODER_H_
