#include "aeenc/sampler.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <stdexcept>
#include <unordered_set>

#include "aeenc/errors.h"
#include "aeenc/jsonl.h"
#include "aeenc/random.h"

namespace aeenc {

GoldOracle::GoldOracle(const std::vector<EntailmentTree>& trees) {
  for (const auto& tree : trees) {
    for (const auto& [parent, child] : ExtractPairs(tree)) {
      children_[parent].insert(child);
    }
  }
}

bool GoldOracle::IsGold(const std::string& query_id,
                        const std::string& candidate_id) const {
  auto it = children_.find(query_id);
  return it != children_.end() && it->second.contains(candidate_id);
}

bool GoldOracle::Explains(const std::string& query_id,
                          const std::string& candidate_id) {
  return IsGold(query_id, candidate_id);
}

std::string NowIso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch())
                      .count() %
                  1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

AnnotationLog::AnnotationLog(std::filesystem::path path) : file_(std::move(path)) {}

void AnnotationLog::Append(const Annotation& a) {
  const nlohmann::json j = {{"query", a.query},
                            {"candidate", a.candidate},
                            {"verdict", a.positive ? "pos" : "neg"},
                            {"ts", a.ts.empty() ? NowIso8601() : a.ts},
                            {"session", a.session}};
  file_.AppendLine(j.dump());
}

std::vector<Annotation> AnnotationLog::Replay(const std::filesystem::path& path) {
  std::vector<Annotation> out;
  ReadJsonLines(path, [&](std::size_t line_no, const nlohmann::json& j) {
    const std::string verdict = j.at("verdict").get<std::string>();
    if (verdict != "pos" && verdict != "neg") {
      throw ParseError(line_no, "verdict must be \"pos\" or \"neg\"");
    }
    out.push_back({j.at("query").get<std::string>(), j.at("candidate").get<std::string>(),
                   verdict == "pos", j.value("ts", ""), j.value("session", "")});
  });
  return out;
}

InteractiveOracle::InteractiveOracle(Ask ask, AnnotationLog* log, std::string session)
    : ask_(std::move(ask)), log_(log), session_(std::move(session)) {}

bool InteractiveOracle::Explains(const std::string& query_id,
                                 const std::string& candidate_id) {
  const FactPair key{query_id, candidate_id};
  if (auto it = verdicts_.find(key); it != verdicts_.end()) return it->second;
  const bool verdict = ask_(query_id, candidate_id);
  if (log_ != nullptr) log_->Append({query_id, candidate_id, verdict, "", session_});
  verdicts_.emplace(key, verdict);
  return verdict;
}

void SamplePools::AddPositive(const std::string& q, const std::string& p) {
  negatives.erase({q, p});
  positives.insert({q, p});
}

void SamplePools::AddNegative(const std::string& q, const std::string& p) {
  positives.erase({q, p});
  negatives.insert({q, p});
}

void SamplePools::Merge(const SamplePools& other) {
  for (const auto& [q, p] : other.positives) AddPositive(q, p);
  for (const auto& [q, p] : other.negatives) AddNegative(q, p);
  max_depth = std::max(max_depth, other.max_depth);
}

nlohmann::json ToJson(const SamplePools& pools) {
  auto pairs = [](const std::set<FactPair>& s) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [q, p] : s) a.push_back({q, p});
    return a;
  };
  return {{"round", pools.round},
          {"max_depth", pools.max_depth},
          {"positives", pairs(pools.positives)},
          {"negatives", pairs(pools.negatives)}};
}

SamplePools PoolsFromJson(const nlohmann::json& j) {
  SamplePools pools;
  pools.round = j.value("round", 0);
  pools.max_depth = j.value("max_depth", 0);
  for (const auto& e : j.at("positives")) {
    pools.positives.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  }
  for (const auto& e : j.at("negatives")) {
    pools.negatives.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  }
  return pools;
}

std::string SerializePools(const SamplePools& pools) {
  return ToJson(pools).dump() + "\n";
}

SamplePools PoolsFromAnnotations(const std::vector<Annotation>& annotations) {
  SamplePools pools;
  for (const auto& a : annotations) {
    if (a.positive) {
      pools.AddPositive(a.query, a.candidate);
    } else {
      pools.AddNegative(a.query, a.candidate);
    }
  }
  return pools;
}

namespace {

void Expand(const Fact& query, int budget, bool top_level, const PremiseIndex& index,
            const EncoderStack& stack, const Corpus& corpus, Oracle& oracle,
            const AcsOptions& options, AcsVisited& visited, SamplePools& pools) {
  if (budget <= 0) return;
  if (auto it = visited.find(query.id); it != visited.end() && it->second >= budget) {
    return;
  }
  visited[query.id] = budget;
  const auto candidates =
      RetrieveTopK(index, stack, query, {options.k, options.exclude_self, options.exec});
  for (const auto& cand : candidates) {
    if (oracle.Explains(query.id, cand.fact_id)) {
      if (top_level || options.keep_nested_positives) {
        pools.AddPositive(query.id, cand.fact_id);
      }
      Expand(corpus.At(cand.fact_id), budget - 1, false, index, stack, corpus, oracle,
             options, visited, pools);
    } else {
      pools.AddNegative(query.id, cand.fact_id);
    }
  }
}

}  // namespace

SamplePools Acs(const Fact& query, const PremiseIndex& index,
                const EncoderStack& stack, const Corpus& corpus, Oracle& oracle,
                const AcsOptions& options, AcsVisited* visited) {
  SamplePools pools;
  pools.max_depth = options.depth_budget;
  AcsVisited local;
  Expand(query, options.depth_budget, true, index, stack, corpus, oracle, options,
         visited ? *visited : local, pools);
  return pools;
}

SamplePools AeEnc(const std::vector<const Fact*>& hypotheses,
                  const PremiseIndex& index, const EncoderStack& stack,
                  const Corpus& corpus, Oracle& oracle, const AcsOptions& options) {
  std::vector<SamplePools> per(hypotheses.size());
  if (options.exec == Execution::kParallel && oracle.thread_safe()) {
    AcsOptions inner = options;
    inner.exec = Execution::kSerial;
    const auto n = static_cast<std::int64_t>(hypotheses.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        per[static_cast<std::size_t>(i)] = Acs(*hypotheses[static_cast<std::size_t>(i)],
                                               index, stack, corpus, oracle, inner);
      } catch (...) {
#pragma omp critical(aeenc_ae_enc)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
      per[i] = Acs(*hypotheses[i], index, stack, corpus, oracle, options);
    }
  }
  SamplePools pools;
  pools.max_depth = options.depth_budget;
  for (const auto& p : per) pools.Merge(p);
  return pools;
}

int MaxTreeDepth(const std::vector<EntailmentTree>& trees) {
  int d = 0;
  for (const auto& t : trees) d = std::max(d, TreeDepth(t));
  return d;
}

ComposeResult ComposeTrainingSet(const SamplePools& pools, const TripletStore& gold,
                                 const Corpus& corpus, const ComposeOptions& options) {
  if (!(options.mix_ratio >= 0.0 && options.mix_ratio <= 1.0)) {
    throw std::invalid_argument("mix_ratio must be in [0, 1]");
  }
  std::map<std::string, std::vector<std::string>> active;
  for (const auto& [q, p] : pools.negatives) active[q].push_back(p);

  std::map<std::string, std::vector<std::pair<std::string, Provenance>>> base;
  std::set<FactPair> positives = pools.positives;
  {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : gold.records) {
      if (seen.insert({r.h_id, r.neg_id}).second) {
        base[r.h_id].emplace_back(r.neg_id, r.provenance);
      }
      if (options.include_gold_positives) positives.insert({r.h_id, r.pos_id});
    }
  }
  std::map<std::string, std::set<std::string>> positives_of;
  for (const auto& [q, p] : positives) positives_of[q].insert(p);

  const std::size_t n = options.negatives_per_positive;
  const auto n_active_target =
      static_cast<std::size_t>(std::floor(options.mix_ratio * static_cast<double>(n) + 0.5));

  ComposeResult result;
  std::set<std::string> fallback;
  Rng rng(options.seed);
  for (const auto& [q, p] : positives) {
    const auto& own_positives = positives_of[q];
    std::vector<std::string> act;
    if (auto it = active.find(q); it != active.end()) {
      for (const auto& c : it->second) {
        if (!own_positives.contains(c)) act.push_back(c);
      }
    }
    std::vector<std::pair<std::string, Provenance>> pool;
    if (auto it = base.find(q); it != base.end()) {
      for (const auto& e : it->second) {
        if (!own_positives.contains(e.first) && e.first != q) pool.push_back(e);
      }
    }
    std::size_t n_active = n_active_target;
    if (act.size() < n_active) {
      fallback.insert(q);
      n_active = act.size();
    }
    for (std::size_t pick : rng.Sample(act.size(), n_active)) {
      result.store.Append({q, p, act[pick], Provenance::kActive});
    }
    const std::size_t n_base = n - n_active;
    if (n_base == 0) continue;
    if (pool.empty()) {
      // Uniform random facts outside the query's positives.
      std::vector<std::size_t> cands;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& id = corpus.facts()[i].id;
        if (id != q && !own_positives.contains(id)) cands.push_back(i);
      }
      for (std::size_t pick : rng.Sample(cands.size(), n_base)) {
        result.store.Append({q, p, corpus.facts()[cands[pick]].id, Provenance::kRandom});
      }
      continue;
    }
    for (std::size_t pick : rng.Sample(pool.size(), n_base)) {
      result.store.Append({q, p, pool[pick].first, pool[pick].second});
    }
  }
  result.fallback_queries.assign(fallback.begin(), fallback.end());
  return result;
}

IterativeResult ResampleIterative(const std::vector<const Fact*>& hypotheses,
                                  const Corpus& corpus, const TripletStore& gold,
                                  Oracle& oracle, const EncoderStack& stack,
                                  const PremiseIndex& index,
                                  const IterativeConfig& cfg) {
  if (cfg.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  IterativeResult result{{}, {}, stack, index};
  SamplePools pools;
  for (int round = 0; round < cfg.rounds; ++round) {
    SamplePools fresh = AeEnc(hypotheses, result.index, result.stack, corpus, oracle,
                              cfg.acs);
    if (cfg.accumulate) {
      pools.Merge(fresh);
    } else {
      pools = std::move(fresh);
    }
    pools.round = round;
    result.snapshots.push_back(pools);

    ComposeOptions compose = cfg.compose;
    compose.seed = cfg.compose.seed + static_cast<std::uint64_t>(round);
    ComposeResult composed = ComposeTrainingSet(pools, gold, corpus, compose);
    composed.store.round = round;
    if (composed.store.records.empty()) break;
    TrainConfig train = cfg.train;
    train.seed = cfg.train.seed + static_cast<std::uint64_t>(round);
    FineTuneResult tuned = FineTune(composed.store, corpus, result.stack, train);
    result.stack = std::move(tuned.stack);
    result.reports.push_back(std::move(tuned.report));
    result.index = Refresh(result.index, result.stack, cfg.acs.exec);
  }
  return result;
}

}  // namespace aeenc
