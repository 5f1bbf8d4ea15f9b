#ifndef AEENC_EXPERIMENT_H_
#define AEENC_EXPERIMENT_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/evaluator.h"
#include "aeenc/sampler.h"
#include "aeenc/synth.h"
#include "aeenc/trainer.h"
#include "json.hpp"

namespace aeenc {

enum class Variant {
  kNoFineTuning,
  kRandomNegatives,
  kAeEnc,
  kAeEncNoRegularization,
  kIterativeAeEnc,
};

std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);
std::vector<Variant> AllVariants();

struct ExperimentConfig {
  TrainConfig train;
  AcsOptions acs;
  // depth_budget <= 0 in `acs` means "deepest training tree".
  ComposeOptions compose;
  int rounds = 4;
  // Iterative variant: false splits train.epochs across the rounds, true
  // trains every round for train.epochs.
  bool full_epochs_per_round = false;
  bool accumulate = true;
  MetricsOptions metrics;
};

// Settings the synthetic benchmark runs with.
ExperimentConfig SynthExperimentConfig(std::uint64_t seed);

struct VariantResult {
  Variant variant = Variant::kNoFineTuning;
  MetricsReport metrics;
  std::vector<RunReport> runs;
  EncoderStack stack;
};

// Trains each variant on the train trees (gold oracle for active sampling)
// and evaluates retrieval for the test trees over the whole corpus. The
// iterative variant splits the epoch budget across its rounds.
VariantResult RunVariant(Variant variant, const Corpus& corpus,
                         const std::vector<EntailmentTree>& train,
                         const std::vector<EntailmentTree>& test,
                         std::shared_ptr<const BaseEncoder> base,
                         const ExperimentConfig& cfg);

nlohmann::json ToJson(const VariantResult& result);

struct BenchmarkResult {
  std::vector<std::uint64_t> seeds;
  // Variant name -> MAP per seed, in seed order.
  std::map<std::string, std::vector<double>> map_by_seed;
  std::map<std::string, double> median_map;
};

// Generates the biased synthetic dataset for each seed and runs every
// variant with SynthExperimentConfig(seed).
BenchmarkResult RunSynthBenchmark(const SynthConfig& data_cfg,
                                  const std::vector<std::uint64_t>& seeds);
nlohmann::json ToJson(const BenchmarkResult& result);


}  // namespace aeenc

#endif  // AEENC_EXPERIMENT_H_
