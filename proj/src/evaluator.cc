#include "aeenc/evaluator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aeenc {

double AveragePrecision(std::span<const std::string> ranking,
                        const std::set<std::string>& gold) {
  if (gold.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (!gold.contains(ranking[i]) || !seen.insert(ranking[i]).second) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(gold.size());
}

double NdcgAtK(std::span<const std::string> ranking,
               const std::set<std::string>& gold, std::size_t k) {
  if (gold.empty() || k == 0) return 0.0;
  const std::size_t depth = std::min(k, ranking.size());
  double dcg = 0.0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < depth; ++i) {
    if (gold.contains(ranking[i]) && seen.insert(ranking[i]).second) {
      dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(gold.size(), k);
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  return dcg / idcg;
}

double HitAtK(std::span<const std::string> ranking,
              const std::set<std::string>& gold, std::size_t k, bool any_hit) {
  if (gold.empty()) return 0.0;
  std::set<std::string> found;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (gold.contains(ranking[i])) found.insert(ranking[i]);
  }
  if (any_hit) return found.empty() ? 0.0 : 1.0;
  return static_cast<double>(found.size()) / static_cast<double>(gold.size());
}

namespace {

nlohmann::json KeyedMap(const std::map<std::size_t, double>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

nlohmann::json ToJson(const MetricsReport& report, bool include_per_query) {
  nlohmann::json j = {{"map", report.map},
                      {"ndcg", report.ndcg},
                      {"ndcg_at", KeyedMap(report.ndcg_at)},
                      {"hit_at", KeyedMap(report.hit_at)},
                      {"hit_definition", report.any_hit ? "any-hit" : "recall"},
                      {"queries", report.queries},
                      {"excluded_queries", report.excluded_queries}};
  if (include_per_query) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& q : report.per_query) {
      rows.push_back({{"query_id", q.query_id},
                      {"ap", q.ap},
                      {"ndcg", q.ndcg},
                      {"ndcg_at", KeyedMap(q.ndcg_at)},
                      {"hit_at", KeyedMap(q.hit_at)}});
    }
    j["per_query"] = std::move(rows);
  }
  return j;
}

MetricsReport ComputeMetrics(std::span<const RankedQuery> queries,
                             const MetricsOptions& options) {
  MetricsReport report;
  report.any_hit = options.any_hit;
  for (std::size_t k : options.k_list) {
    report.ndcg_at[k] = 0.0;
    report.hit_at[k] = 0.0;
  }
  for (const auto& q : queries) {
    if (q.gold.empty()) {
      ++report.excluded_queries;
      continue;
    }
    QueryMetrics m;
    m.query_id = q.query_id;
    m.ap = AveragePrecision(q.ranking, q.gold);
    m.ndcg = NdcgAtK(q.ranking, q.gold, kAllRanks);
    for (std::size_t k : options.k_list) {
      m.ndcg_at[k] = NdcgAtK(q.ranking, q.gold, k);
      m.hit_at[k] = HitAtK(q.ranking, q.gold, k, options.any_hit);
    }
    ++report.queries;
    report.map += m.ap;
    report.ndcg += m.ndcg;
    for (std::size_t k : options.k_list) {
      report.ndcg_at[k] += m.ndcg_at[k];
      report.hit_at[k] += m.hit_at[k];
    }
    if (options.per_query) report.per_query.push_back(std::move(m));
  }
  if (report.queries > 0) {
    const double n = static_cast<double>(report.queries);
    report.map /= n;
    report.ndcg /= n;
    for (auto& [k, v] : report.ndcg_at) v /= n;
    for (auto& [k, v] : report.hit_at) v /= n;
  }
  return report;
}

namespace {

// Parent id -> gold children, across all trees, in first-seen order.
std::vector<std::pair<std::string, std::set<std::string>>> GoldChildren(
    const std::vector<EntailmentTree>& trees) {
  std::vector<std::pair<std::string, std::set<std::string>>> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& tree : trees) {
    for (const auto& [parent, child] : ExtractPairs(tree)) {
      auto [it, inserted] = slot.emplace(parent, out.size());
      if (inserted) out.push_back({parent, {}});
      out[it->second].second.insert(child);
    }
  }
  return out;
}

}  // namespace

std::vector<RankedQuery> RankTreeQueries(const std::vector<EntailmentTree>& trees,
                                         const Corpus& corpus,
                                         const PremiseIndex& index,
                                         const EncoderStack& stack, bool exclude_self,
                                         Execution exec) {
  std::vector<RankedQuery> out;
  for (auto& [parent, gold] : GoldChildren(trees)) {
    RankedQuery q{parent, {}, gold};
    if (index.size() > 0) {
      for (const auto& s :
           RetrieveTopK(index, stack, corpus.At(parent), {index.size(), exclude_self, exec})) {
        q.ranking.push_back(s.fact_id);
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

MetricsReport EvaluateRankings(const std::vector<EntailmentTree>& trees,
                               const Corpus& corpus, const PremiseIndex& index,
                               const EncoderStack& stack,
                               const MetricsOptions& options, Execution exec) {
  const auto queries = RankTreeQueries(trees, corpus, index, stack, options.exclude_self, exec);
  return ComputeMetrics(queries, options);
}

PairClassification ClassifyPairs(const std::vector<EntailmentTree>& trees,
                                 const Corpus& corpus, const PremiseIndex& index,
                                 const EncoderStack& stack, std::size_t k,
                                 FalsePositiveRule rule, bool exclude_self,
                                 Execution exec) {
  if (k == 0) throw std::invalid_argument("classify_pairs needs k >= 1");
  PairClassification out;
  out.k_used = k;
  std::map<std::string, std::set<std::string>> tree_nodes_of;
  for (const auto& tree : trees) {
    const auto ids = TreeFactIds(tree);
    std::set<std::string> nodes(ids.begin(), ids.end());
    for (const auto& id : ids) tree_nodes_of[id].insert(nodes.begin(), nodes.end());
  }
  for (const auto& [parent, gold] : GoldChildren(trees)) {
    std::set<std::string> retrieved;
    for (const auto& s : RetrieveTopK(index, stack, corpus.At(parent), {k, exclude_self, exec})) {
      retrieved.insert(s.fact_id);
    }
    for (const auto& child : gold) {
      (retrieved.contains(child) ? out.tps : out.fns).insert({parent, child});
    }
    const auto& nodes = tree_nodes_of[parent];
    for (const auto& c : retrieved) {
      if (gold.contains(c)) continue;
      if (rule == FalsePositiveRule::kOutsideTree && nodes.contains(c)) continue;
      out.fps.insert({parent, c});
    }
  }
  return out;
}

nlohmann::json ToJson(const PairClassification& c) {
  auto pairs = [](const std::set<FactPair>& s) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [q, p] : s) a.push_back({q, p});
    return a;
  };
  return {{"k", c.k_used},
          {"counts", {{"tp", c.tps.size()}, {"fn", c.fns.size()}, {"fp", c.fps.size()}}},
          {"tp", pairs(c.tps)},
          {"fn", pairs(c.fns)},
          {"fp", pairs(c.fps)}};
}

namespace {

GroupSummary Summarize(std::vector<double> values) {
  GroupSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

std::size_t BinOf(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return std::min(static_cast<std::size_t>(clamped * kHistogramBins), kHistogramBins - 1);
}

}  // namespace

BiasReport MakeBiasReport(const PairClassification& classification,
                          const Corpus& corpus, const EncoderStack& stack) {
  if (classification.tps.empty() && classification.fns.empty() &&
      classification.fps.empty()) {
    throw std::invalid_argument("bias report needs at least one classified pair");
  }
  std::map<std::string, Vector> query_cache;
  std::map<std::string, Vector> premise_cache;
  auto encoded = [&](std::map<std::string, Vector>& cache, const std::string& id,
                     EncodeSide side) -> const Vector& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, stack.Encode(corpus.At(id), side)).first;
    return it->second;
  };

  BiasReport report;
  const std::pair<const char*, const std::set<FactPair>*> groups[] = {
      {"TP", &classification.tps}, {"FN", &classification.fns}, {"FP", &classification.fps}};
  for (const auto& [group, pairs] : groups) {
    std::vector<double> overlap;
    std::vector<double> cosine;
    for (const auto& [q, p] : *pairs) {
      overlap.push_back(JaccardOverlap(corpus.At(q), corpus.At(p)));
      cosine.push_back(CosineScore(encoded(query_cache, q, EncodeSide::kQuery),
                                   encoded(premise_cache, p, EncodeSide::kPremise))
                           .score);
    }
    for (const auto& [measure, values] :
         {std::pair<const char*, std::vector<double>*>{"overlap", &overlap},
          {"cosine", &cosine}}) {
      std::vector<std::size_t> counts(kHistogramBins, 0);
      for (double v : *values) ++counts[BinOf(v)];
      for (std::size_t b = 0; b < kHistogramBins; ++b) {
        report.rows.push_back({group, measure, static_cast<double>(b) / kHistogramBins,
                               static_cast<double>(b + 1) / kHistogramBins, counts[b]});
      }
      report.summary[{group, measure}] = Summarize(*values);
    }
  }
  return report;
}

std::string BiasReportCsv(const BiasReport& report) {
  std::ostringstream out;
  out << "group,measure,bin_lo,bin_hi,count\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.2f,%zu\n", r.group.c_str(),
                  r.measure.c_str(), r.bin_lo, r.bin_hi, r.count);
    out << buf;
  }
  return out.str();
}

nlohmann::json BiasSummaryJson(const BiasReport& report) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, s] : report.summary) {
    j[key.first][key.second] = {{"count", s.count}, {"mean", s.mean}, {"median", s.median}};
  }
  return j;
}

}  // namespace aeenc
