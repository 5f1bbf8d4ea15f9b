#ifndef AEENC_SAMPLER_H_
#define AEENC_SAMPLER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/index.h"
#include "aeenc/jsonl.h"
#include "aeenc/trainer.h"
#include "json.hpp"

namespace aeenc {

// Decides whether a retrieved candidate explains the query.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual bool Explains(const std::string& query_id,
                        const std::string& candidate_id) = 0;
  // True when Explains may be called concurrently.
  virtual bool thread_safe() const { return false; }
};

// Simulated annotator: a candidate explains a query iff (query, candidate)
// is a parent-child edge of some gold tree.
class GoldOracle : public Oracle {
 public:
  explicit GoldOracle(const std::vector<EntailmentTree>& trees);

  bool Explains(const std::string& query_id,
                const std::string& candidate_id) override;
  bool IsGold(const std::string& query_id, const std::string& candidate_id) const;
  bool thread_safe() const override { return true; }
  const std::map<std::string, std::set<std::string>>& children() const {
    return children_;
  }

 private:
  std::map<std::string, std::set<std::string>> children_;
};

struct Annotation {
  std::string query;
  std::string candidate;
  bool positive = false;
  std::string ts;
  std::string session;
};

std::string NowIso8601();

// Append-only JSON Lines annotation log. Every Append is flushed to stable
// storage before it returns.
class AnnotationLog {
 public:
  explicit AnnotationLog(std::filesystem::path path);

  void Append(const Annotation& a);
  const std::filesystem::path& path() const { return file_.path(); }

  // Reads every complete record. A torn final line (no trailing newline and
  // unparseable) is ignored; any other malformed line is a ParseError.
  static std::vector<Annotation> Replay(const std::filesystem::path& path);

 private:
  DurableAppender file_;
};

// Human-in-the-loop oracle: asks `ask` once per distinct pair and records
// each verdict in the log (when given) before returning it.
class InteractiveOracle : public Oracle {
 public:
  using Ask = std::function<bool(const std::string& query_id,
                                 const std::string& candidate_id)>;
  InteractiveOracle(Ask ask, AnnotationLog* log, std::string session);

  bool Explains(const std::string& query_id,
                const std::string& candidate_id) override;

 private:
  Ask ask_;
  AnnotationLog* log_;
  std::string session_;
  std::map<FactPair, bool> verdicts_;
};

struct SamplePools {
  std::set<FactPair> positives;
  std::set<FactPair> negatives;
  int round = 0;
  int max_depth = 0;

  // Later verdicts win: adding a pair to one set removes it from the other.
  void AddPositive(const std::string& q, const std::string& p);
  void AddNegative(const std::string& q, const std::string& p);
  void Merge(const SamplePools& other);

  friend bool operator==(const SamplePools&, const SamplePools&) = default;
};

nlohmann::json ToJson(const SamplePools& pools);
SamplePools PoolsFromJson(const nlohmann::json& j);
// Canonical text form (sorted pairs, fixed key order, trailing newline).
std::string SerializePools(const SamplePools& pools);

SamplePools PoolsFromAnnotations(const std::vector<Annotation>& annotations);

struct AcsOptions {
  std::size_t k = 20;
  // Number of retrieval levels below the query; 0 retrieves nothing.
  int depth_budget = 1;
  bool exclude_self = true;
  // When false, positives found below the first level are dropped and only
  // their negatives kept.
  bool keep_nested_positives = true;
  Execution exec = Execution::kParallel;
};

// Fact id -> largest remaining depth budget it has been expanded with. A
// node is re-expanded only with a strictly larger budget, which bounds the
// recursion and makes the result independent of traversal order.
using AcsVisited = std::unordered_map<std::string, int>;

// Active contrastive sampling from one query node: retrieve the top k,
// record oracle-positive candidates as positives and recurse into them with
// one less level of budget, record the rest as negatives.
SamplePools Acs(const Fact& query, const PremiseIndex& index,
                const EncoderStack& stack, const Corpus& corpus, Oracle& oracle,
                const AcsOptions& options, AcsVisited* visited = nullptr);

// Union of Acs over every hypothesis, each with a fresh visited map.
SamplePools AeEnc(const std::vector<const Fact*>& hypotheses,
                  const PremiseIndex& index, const EncoderStack& stack,
                  const Corpus& corpus, Oracle& oracle, const AcsOptions& options);

// Deepest gold tree, in edges; the default ACS depth budget.
int MaxTreeDepth(const std::vector<EntailmentTree>& trees);

struct ComposeOptions {
  // Fraction of each positive's negatives drawn from its query's active
  // negatives; count = floor(mix_ratio * n + 0.5).
  double mix_ratio = 0.5;
  std::size_t negatives_per_positive = 4;
  // Also treat every (h, pos) pair of the gold store as a positive.
  bool include_gold_positives = false;
  std::uint64_t seed = 0;
};

struct ComposeResult {
  TripletStore store;
  // Queries that needed more active negatives than they had; the shortfall
  // was filled from gold/random distractors.
  std::vector<std::string> fallback_queries;
};

ComposeResult ComposeTrainingSet(const SamplePools& pools, const TripletStore& gold,
                                 const Corpus& corpus, const ComposeOptions& options);

struct IterativeConfig {
  AcsOptions acs;
  ComposeOptions compose;
  TrainConfig train;
  int rounds = 4;
  // Accumulate pools across rounds; otherwise each round replaces them.
  bool accumulate = true;
};

struct IterativeResult {
  std::vector<SamplePools> snapshots;
  std::vector<RunReport> reports;
  EncoderStack stack;
  PremiseIndex index;
};

// Each round samples pools with the current model, trains on the composed
// set, and refreshes the index before the next round resamples.
IterativeResult ResampleIterative(const std::vector<const Fact*>& hypotheses,
                                  const Corpus& corpus, const TripletStore& gold,
                                  Oracle& oracle, const EncoderStack& stack,
                                  const PremiseIndex& index,
                                  const IterativeConfig& cfg);

}  // namespace aeenc

#endif  // AEENC_SAMPLER_H_
