#ifndef AEENC_EVALUATOR_H_
#define AEENC_EVALUATOR_H_

#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/index.h"
#include "json.hpp"

namespace aeenc {

inline constexpr std::size_t kAllRanks = std::numeric_limits<std::size_t>::max();

// Mean over gold items of precision at their rank; gold items missing from
// the ranking contribute 0. Returns 0 for an empty gold set.
double AveragePrecision(std::span<const std::string> ranking,
                        const std::set<std::string>& gold);

// Binary-gain NDCG over the first k ranks (kAllRanks for the whole list).
double NdcgAtK(std::span<const std::string> ranking,
               const std::set<std::string>& gold, std::size_t k);

// |top-k ∩ gold| / |gold|, or with any_hit, 1 if any gold item is in the top k.
double HitAtK(std::span<const std::string> ranking,
              const std::set<std::string>& gold, std::size_t k,
              bool any_hit = false);

struct QueryMetrics {
  std::string query_id;
  double ap = 0.0;
  double ndcg = 0.0;
  std::map<std::size_t, double> ndcg_at;
  std::map<std::size_t, double> hit_at;
};

struct MetricsReport {
  double map = 0.0;
  double ndcg = 0.0;
  std::map<std::size_t, double> ndcg_at;
  std::map<std::size_t, double> hit_at;
  std::size_t queries = 0;
  std::size_t excluded_queries = 0;
  bool any_hit = false;
  std::vector<QueryMetrics> per_query;
};

nlohmann::json ToJson(const MetricsReport& report, bool include_per_query = false);

struct RankedQuery {
  std::string query_id;
  std::vector<std::string> ranking;
  std::set<std::string> gold;
};

struct MetricsOptions {
  std::vector<std::size_t> k_list = {10, 20, 30, 40, 50};
  bool any_hit = false;
  bool per_query = false;
  // Drop each query from its own ranking.
  bool exclude_self = false;
};

// Averages over queries with non-empty gold; the rest are counted as
// excluded.
MetricsReport ComputeMetrics(std::span<const RankedQuery> queries,
                             const MetricsOptions& options = {});

// One query per non-leaf tree node, gold = its direct children; the
// ranking is the whole index ordered by score.
std::vector<RankedQuery> RankTreeQueries(const std::vector<EntailmentTree>& trees,
                                         const Corpus& corpus,
                                         const PremiseIndex& index,
                                         const EncoderStack& stack,
                                         bool exclude_self = false,
                                         Execution exec = Execution::kParallel);

MetricsReport EvaluateRankings(const std::vector<EntailmentTree>& trees,
                               const Corpus& corpus, const PremiseIndex& index,
                               const EncoderStack& stack,
                               const MetricsOptions& options = {},
                               Execution exec = Execution::kParallel);

// What counts as a false positive among retrieved candidates.
enum class FalsePositiveRule {
  // Any retrieved pair that is not a gold parent-child edge.
  kNonGoldPair,
  // Only retrieved candidates that are not nodes of the query's tree.
  kOutsideTree,
};

struct PairClassification {
  std::set<FactPair> tps;
  std::set<FactPair> fns;
  std::set<FactPair> fps;
  std::size_t k_used = 0;
};

// Throws std::invalid_argument when k == 0.
PairClassification ClassifyPairs(const std::vector<EntailmentTree>& trees,
                                 const Corpus& corpus, const PremiseIndex& index,
                                 const EncoderStack& stack, std::size_t k,
                                 FalsePositiveRule rule = FalsePositiveRule::kNonGoldPair,
                                 bool exclude_self = false,
                                 Execution exec = Execution::kParallel);

nlohmann::json ToJson(const PairClassification& c);

struct HistogramRow {
  std::string group;
  std::string measure;
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  std::size_t count = 0;
};

struct GroupSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

struct BiasReport {
  std::vector<HistogramRow> rows;
  // (group, measure) -> summary of the unclamped values.
  std::map<std::pair<std::string, std::string>, GroupSummary> summary;
};

inline constexpr std::size_t kHistogramBins = 20;

// Token Jaccard overlap and cosine score (under `stack`) for every pair of
// each group, binned into 20 uniform bins over [0, 1]. Cosine values
// outside [0, 1] are clamped into the end bins. Throws std::invalid_argument
// when every group is empty.
BiasReport MakeBiasReport(const PairClassification& classification,
                          const Corpus& corpus, const EncoderStack& stack);

// Columns: group,measure,bin_lo,bin_hi,count.
std::string BiasReportCsv(const BiasReport& report);
nlohmann::json BiasSummaryJson(const BiasReport& report);

}  // namespace aeenc

#endif  // AEENC_EVALUATOR_H_
