#include "aeenc/encoder.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "aeenc/errors.h"
#include "json.hpp"

namespace aeenc {

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

Vector MatVec(const Matrix& m, std::span<const double> v) {
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = Dot(m.row(r), v);
  return out;
}

double DistanceToIdentity(const Matrix& m) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double d = m(r, c) - (r == c ? 1.0 : 0.0);
      s += d * d;
    }
  }
  return std::sqrt(s);
}

Similarity CosineScore(std::span<const double> u, std::span<const double> v) {
  const double nu = Norm(u);
  const double nv = Norm(v);
  if (nu == 0.0 || nv == 0.0) return {0.0, true};
  return {Dot(u, v) / (nu * nv), false};
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                                 std::vector<double> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw std::invalid_argument("embedding dim must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw std::invalid_argument("embedding values do not match ids x dim");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("non-finite embedding value in row " +
                                  std::to_string(i / dim_));
    }
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!by_id_.emplace(ids_[i], i).second) {
      throw std::invalid_argument("duplicate embedding id \"" + ids_[i] + "\"");
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::Find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string_view> SplitLines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find('\n', pos);
    if (end == std::string_view::npos) end = s.size();
    std::string_view line = s.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::string ReadAll(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteAll(const std::filesystem::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

void AppendDouble(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

}  // namespace

EmbeddingMatrix ParseEmbeddings(std::string_view vectors, std::string_view ids) {
  const auto lines = SplitLines(vectors);
  if (lines.empty()) throw ParseError(1, "missing EMB header");
  const auto header = SplitFields(lines[0]);
  std::size_t count = 0;
  std::size_t dim = 0;
  auto parse_size = [](std::string_view f, std::size_t& out) {
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
    return ec == std::errc() && p == f.data() + f.size();
  };
  if (header.size() != 4 || header[0] != "EMB" || header[1] != "v1" ||
      !parse_size(header[2], count) || !parse_size(header[3], dim) || dim == 0) {
    throw ParseError(1, "expected header \"EMB v1 <count> <dim>\"");
  }
  std::vector<double> values;
  values.reserve(count * dim);
  std::size_t rows = 0;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto fields = SplitFields(lines[ln]);
    if (fields.empty()) continue;
    if (rows == count) throw ParseError(ln + 1, "more rows than header count");
    if (fields.size() != dim) {
      throw ParseError(ln + 1, "expected " + std::to_string(dim) +
                                   " values, found " +
                                   std::to_string(fields.size()));
    }
    for (const auto f : fields) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size()) {
        throw ParseError(ln + 1, "non-numeric value \"" + std::string(f) + "\"");
      }
      if (!std::isfinite(v)) throw ParseError(ln + 1, "non-finite value");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows != count) {
    throw ParseError(lines.size(), "header declares " + std::to_string(count) +
                                       " rows, found " + std::to_string(rows));
  }
  std::vector<std::string> id_list;
  const auto id_lines = SplitLines(ids);
  for (std::size_t ln = 0; ln < id_lines.size(); ++ln) {
    if (id_lines[ln].empty()) continue;
    id_list.emplace_back(id_lines[ln]);
  }
  if (id_list.size() != count) {
    throw ParseError(id_lines.size(), "ids file has " +
                                          std::to_string(id_list.size()) +
                                          " ids, vectors file has " +
                                          std::to_string(count));
  }
  try {
    return EmbeddingMatrix(std::move(id_list), dim, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
}

EmbeddingMatrix LoadEmbeddings(const std::filesystem::path& vectors_path,
                               const std::filesystem::path& ids_path) {
  return ParseEmbeddings(ReadAll(vectors_path), ReadAll(ids_path));
}

std::string FormatEmbeddingVectors(const EmbeddingMatrix& m) {
  std::string out = "EMB v1 " + std::to_string(m.size()) + " " +
                    std::to_string(m.dim()) + "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto row = m.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(' ');
      AppendDouble(out, row[c]);
    }
    out.push_back('\n');
  }
  return out;
}

void SaveEmbeddings(const EmbeddingMatrix& m,
                    const std::filesystem::path& vectors_path,
                    const std::filesystem::path& ids_path) {
  WriteAll(vectors_path, FormatEmbeddingVectors(m));
  std::string ids;
  for (const auto& id : m.ids()) {
    ids += id;
    ids.push_back('\n');
  }
  WriteAll(ids_path, ids);
}

TfidfModel::TfidfModel(const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("tf-idf needs a non-empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& f : corpus.facts()) {
    std::vector<std::string> uniq = f.tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++df[t];
  }
  const double n = static_cast<double>(corpus.size());
  vocabulary_.reserve(df.size());
  idf_.reserve(df.size());
  for (const auto& [term, count] : df) {
    term_index_.emplace(term, vocabulary_.size());
    vocabulary_.push_back(term);
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
}

std::optional<std::size_t> TfidfModel::TermIndex(std::string_view token) const {
  auto it = term_index_.find(std::string(token));
  if (it == term_index_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfidfModel::EncodeSparse(const std::vector<std::string>& tokens) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokens) {
    if (auto idx = TermIndex(t)) counts[static_cast<std::uint32_t>(*idx)] += 1.0;
  }
  SparseVector out;
  double sq = 0.0;
  for (const auto& [idx, tf] : counts) {
    const double w = tf * idf_[idx];
    out.index.push_back(idx);
    out.value.push_back(w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& v : out.value) v *= inv;
  }
  return out;
}

Vector TfidfModel::Encode(const std::vector<std::string>& tokens) const {
  Vector dense(dim(), 0.0);
  const SparseVector s = EncodeSparse(tokens);
  for (std::size_t i = 0; i < s.index.size(); ++i) dense[s.index[i]] = s.value[i];
  return dense;
}

EmbeddingMatrix TfidfEncode(const Corpus& corpus) {
  const TfidfModel model(corpus);
  std::vector<std::string> ids;
  std::vector<double> values;
  values.reserve(corpus.size() * model.dim());
  for (const auto& f : corpus.facts()) {
    ids.push_back(f.id);
    const Vector row = model.Encode(f.tokens);
    values.insert(values.end(), row.begin(), row.end());
  }
  return EmbeddingMatrix(std::move(ids), model.dim(), std::move(values));
}

std::shared_ptr<const BaseEncoder> BaseEncoder::FromTfidf(const Corpus& corpus) {
  auto b = std::make_shared<BaseEncoder>();
  b->tfidf_ = std::make_shared<const TfidfModel>(corpus);
  return b;
}

std::shared_ptr<const BaseEncoder> BaseEncoder::FromEmbeddings(EmbeddingMatrix m) {
  auto b = std::make_shared<BaseEncoder>();
  b->table_ = std::make_shared<const EmbeddingMatrix>(std::move(m));
  return b;
}

std::size_t BaseEncoder::dim() const {
  return tfidf_ ? tfidf_->dim() : table_->dim();
}

bool BaseEncoder::CanEmbed(const Fact& fact) const {
  return tfidf_ != nullptr || table_->Find(fact.id).has_value();
}

Vector BaseEncoder::Embed(const Fact& fact) const {
  if (tfidf_) return tfidf_->Encode(fact.tokens);
  if (auto row = table_->Find(fact.id)) {
    const auto r = table_->row(*row);
    return Vector(r.begin(), r.end());
  }
  throw LookupError("no embedding for fact \"" + fact.id + "\"");
}

Adapter Adapter::Identity(std::size_t dim, bool trainable, bool with_bias) {
  Adapter a;
  a.dim_ = dim;
  a.trainable_ = trainable;
  a.with_bias_ = with_bias;
  if (with_bias) a.bias_.assign(dim, 0.0);
  return a;
}

Matrix Adapter::Weights() const {
  return weights_ ? *weights_ : Matrix::Identity(dim_);
}

Matrix& Adapter::mutable_weights() {
  if (!weights_) weights_ = Matrix::Identity(dim_);
  return *weights_;
}

std::span<double> Adapter::mutable_bias() {
  if (!weights_) weights_ = Matrix::Identity(dim_);
  return bias_;
}

void Adapter::SetWeights(Matrix w) {
  if (w.rows() != dim_ || w.cols() != dim_) {
    throw std::invalid_argument("adapter weights must be " + std::to_string(dim_) +
                                "x" + std::to_string(dim_));
  }
  for (double v : w.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite adapter weight");
  }
  weights_ = std::move(w);
}

Vector Adapter::Apply(std::span<const double> x) const {
  if (!weights_) {
    Vector out(x.begin(), x.end());
    for (std::size_t i = 0; i < bias_.size(); ++i) out[i] += bias_[i];
    return out;
  }
  Vector out = MatVec(*weights_, x);
  for (std::size_t i = 0; i < bias_.size(); ++i) out[i] += bias_[i];
  return out;
}

bool operator==(const Adapter& a, const Adapter& b) {
  return a.dim_ == b.dim_ && a.trainable_ == b.trainable_ &&
         a.with_bias_ == b.with_bias_ && a.Weights() == b.Weights() &&
         a.bias_ == b.bias_;
}

std::string_view ModeName(EncoderMode mode) {
  switch (mode) {
    case EncoderMode::kSingle:
      return "single";
    case EncoderMode::kSiamese:
      return "siamese";
    case EncoderMode::kDual:
      return "dual";
  }
  return "single";
}

EncoderMode ParseMode(std::string_view name) {
  if (name == "single") return EncoderMode::kSingle;
  if (name == "siamese") return EncoderMode::kSiamese;
  if (name == "dual") return EncoderMode::kDual;
  throw std::invalid_argument("unknown encoder mode \"" + std::string(name) + "\"");
}

EncoderStack::EncoderStack(std::shared_ptr<const BaseEncoder> base,
                           EncoderMode mode, bool with_bias)
    : base_(std::move(base)), mode_(mode) {
  const std::size_t d = base_->dim();
  adapters_.push_back(Adapter::Identity(d, true, with_bias));
  if (mode_ == EncoderMode::kSingle) {
    adapters_.push_back(Adapter::Identity(d, false, false));
  } else if (mode_ == EncoderMode::kDual) {
    adapters_.push_back(Adapter::Identity(d, true, with_bias));
  }
}

Vector EncoderStack::Apply(std::span<const double> base_vector,
                           EncodeSide side) const {
  switch (side) {
    case EncodeSide::kFixed:
      return Vector(base_vector.begin(), base_vector.end());
    case EncodeSide::kQuery:
      return query_adapter().Apply(base_vector);
    case EncodeSide::kPremise:
      return premise_adapter().Apply(base_vector);
  }
  return {};
}

Vector EncoderStack::Encode(const Fact& fact, EncodeSide side) const {
  return Apply(base_->Embed(fact), side);
}

namespace {

EmbeddingMatrix AdapterToTable(const Adapter& a) {
  const Matrix w = a.Weights();
  std::vector<std::string> ids;
  std::vector<double> values(w.data().begin(), w.data().end());
  for (std::size_t r = 0; r < w.rows(); ++r) ids.push_back("row" + std::to_string(r));
  if (a.has_bias()) {
    ids.push_back("bias");
    values.insert(values.end(), a.bias().begin(), a.bias().end());
  }
  return EmbeddingMatrix(std::move(ids), w.cols(), std::move(values));
}

void TableToAdapter(const EmbeddingMatrix& t, Adapter& a) {
  const std::size_t d = a.dim();
  const std::size_t expected = d + (a.has_bias() ? 1 : 0);
  if (t.dim() != d || t.size() != expected) {
    throw std::runtime_error("saved adapter shape does not match base dim " +
                             std::to_string(d));
  }
  Matrix w(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    const auto row = t.row(r);
    std::copy(row.begin(), row.end(), w.row(r).begin());
  }
  if (w != Matrix::Identity(d)) a.SetWeights(std::move(w));
  if (a.has_bias()) {
    const auto b = t.row(d);
    auto dst = a.mutable_bias();
    std::copy(b.begin(), b.end(), dst.begin());
  }
}

}  // namespace

void EncoderStack::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {{"mode", ModeName(mode_)},
                         {"dim", dim()},
                         {"bias", query_adapter().has_bias()}};
  WriteAll(dir / "mode.json", meta.dump(2) + "\n");
  const auto q = AdapterToTable(query_adapter());
  WriteAll(dir / "query.emb", FormatEmbeddingVectors(q));
  if (mode_ == EncoderMode::kDual) {
    WriteAll(dir / "premise.emb", FormatEmbeddingVectors(AdapterToTable(premise_adapter())));
  }
}

EncoderStack EncoderStack::Load(const std::filesystem::path& dir,
                                std::shared_ptr<const BaseEncoder> base) {
  const auto meta = nlohmann::json::parse(ReadAll(dir / "mode.json"));
  EncoderStack stack(std::move(base), ParseMode(meta.at("mode").get<std::string>()),
                     meta.value("bias", false));
  if (meta.at("dim").get<std::size_t>() != stack.dim()) {
    throw std::runtime_error("saved adapters have dim " +
                             std::to_string(meta.at("dim").get<std::size_t>()) +
                             ", base has " + std::to_string(stack.dim()));
  }
  auto load_table = [&](const char* name) {
    const std::string text = ReadAll(dir / name);
    std::string ids;
    const std::size_t rows = stack.dim() + (meta.value("bias", false) ? 1 : 0);
    for (std::size_t r = 0; r < stack.dim(); ++r) ids += "row" + std::to_string(r) + "\n";
    if (rows > stack.dim()) ids += "bias\n";
    return ParseEmbeddings(text, ids);
  };
  TableToAdapter(load_table("query.emb"), stack.mutable_query_adapter());
  if (stack.mode() == EncoderMode::kDual) {
    TableToAdapter(load_table("premise.emb"), stack.mutable_premise_adapter());
  }
  return stack;
}

}  // namespace aeenc
