#include "aeenc/experiment.h"

#include <algorithm>
#include <stdexcept>

#include "aeenc/index.h"

namespace aeenc {

namespace {

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::kNoFineTuning, "no-fine-tuning"},
    {Variant::kRandomNegatives, "random-negatives"},
    {Variant::kAeEnc, "ae-enc"},
    {Variant::kAeEncNoRegularization, "ae-enc-no-reg"},
    {Variant::kIterativeAeEnc, "iterative-ae-enc"},
};

std::vector<const Fact*> Hypotheses(const std::vector<EntailmentTree>& trees,
                                    const Corpus& corpus) {
  std::vector<const Fact*> out;
  for (const auto& t : trees) out.push_back(&corpus.At(t.root.fact_id));
  return out;
}

}  // namespace

std::string_view VariantName(Variant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  for (const auto& [variant, n] : kVariantNames) {
    if (n == name) return variant;
  }
  throw std::invalid_argument("unknown variant \"" + std::string(name) + "\"");
}

std::vector<Variant> AllVariants() {
  std::vector<Variant> out;
  for (const auto& [variant, name] : kVariantNames) out.push_back(variant);
  return out;
}

ExperimentConfig SynthExperimentConfig(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.train.loss = LossKind::kScl;
  cfg.train.mode = EncoderMode::kSiamese;
  cfg.train.margin = 0.3;
  cfg.train.alpha = 0.05;
  cfg.train.learning_rate = 0.5;
  cfg.train.batch_size = 16;
  cfg.train.epochs = 20;
  cfg.train.seed = seed;
  cfg.acs.k = 5;
  cfg.acs.depth_budget = 0;
  cfg.compose.seed = seed;
  cfg.compose.mix_ratio = 0.75;
  cfg.compose.include_gold_positives = true;
  cfg.metrics.exclude_self = true;
  return cfg;
}

VariantResult RunVariant(Variant variant, const Corpus& corpus,
                         const std::vector<EntailmentTree>& train,
                         const std::vector<EntailmentTree>& test,
                         std::shared_ptr<const BaseEncoder> base,
                         const ExperimentConfig& cfg) {
  EncoderStack stack(base, cfg.train.mode);
  std::vector<RunReport> runs;
  AcsOptions acs = cfg.acs;
  if (acs.depth_budget <= 0) acs.depth_budget = std::max(1, MaxTreeDepth(train));
  const TripletStore gold = BuildGoldTriplets(train, corpus);

  switch (variant) {
    case Variant::kNoFineTuning:
      break;
    case Variant::kRandomNegatives: {
      auto tuned = FineTune(gold, corpus, stack, cfg.train);
      stack = std::move(tuned.stack);
      runs.push_back(std::move(tuned.report));
      break;
    }
    case Variant::kAeEnc:
    case Variant::kAeEncNoRegularization: {
      GoldOracle oracle(train);
      const PremiseIndex index = BuildIndex(stack, corpus, acs.exec);
      const SamplePools pools = AeEnc(Hypotheses(train, corpus), index, stack, corpus,
                                      oracle, acs);
      const ComposeResult composed = ComposeTrainingSet(pools, gold, corpus, cfg.compose);
      TrainConfig train_cfg = cfg.train;
      if (variant == Variant::kAeEncNoRegularization) train_cfg.alpha = 0.0;
      auto tuned = FineTune(composed.store, corpus, stack, train_cfg);
      stack = std::move(tuned.stack);
      runs.push_back(std::move(tuned.report));
      break;
    }
    case Variant::kIterativeAeEnc: {
      GoldOracle oracle(train);
      const PremiseIndex index = BuildIndex(stack, corpus, acs.exec);
      IterativeConfig it;
      it.acs = acs;
      it.compose = cfg.compose;
      it.train = cfg.train;
      it.rounds = cfg.rounds;
      it.accumulate = cfg.accumulate;
      if (!cfg.full_epochs_per_round) {
        it.train.epochs = std::max(1, cfg.train.epochs / std::max(1, cfg.rounds));
      }
      auto result = ResampleIterative(Hypotheses(train, corpus), corpus, gold, oracle,
                                      stack, index, it);
      stack = std::move(result.stack);
      runs = std::move(result.reports);
      break;
    }
  }

  const PremiseIndex index = BuildIndex(stack, corpus, acs.exec);
  MetricsReport metrics = EvaluateRankings(test, corpus, index, stack, cfg.metrics, acs.exec);
  return VariantResult{variant, std::move(metrics), std::move(runs), std::move(stack)};
}

nlohmann::json ToJson(const VariantResult& result) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : result.runs) runs.push_back(ToJson(r));
  return {{"variant", VariantName(result.variant)},
          {"metrics", ToJson(result.metrics)},
          {"runs", runs}};
}

BenchmarkResult RunSynthBenchmark(const SynthConfig& data_cfg,
                                  const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("no seeds");
  BenchmarkResult out;
  out.seeds = seeds;
  for (std::uint64_t seed : seeds) {
    const SynthDataset data = GenerateBiased(data_cfg, seed);
    const auto base = BaseEncoder::FromTfidf(data.corpus);
    const ExperimentConfig cfg = SynthExperimentConfig(seed);
    for (Variant v : AllVariants()) {
      const auto r = RunVariant(v, data.corpus, data.train, data.test, base, cfg);
      out.map_by_seed[std::string(VariantName(v))].push_back(r.metrics.map);
    }
  }
  for (const auto& [name, values] : out.map_by_seed) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    out.median_map[name] =
        n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  return out;
}

nlohmann::json ToJson(const BenchmarkResult& result) {
  return {{"seeds", result.seeds},
          {"map_by_seed", result.map_by_seed},
          {"median_map", result.median_map}};
}

}  // namespace aeenc
