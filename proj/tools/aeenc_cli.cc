#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/evaluator.h"
#include "aeenc/experiment.h"
#include "aeenc/index.h"
#include "aeenc/sampler.h"
#include "aeenc/service.h"
#include "aeenc/synth.h"
#include "aeenc/trainer.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aeenc {
namespace {

// Usage problems detected after CLI11 accepted the command line.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Empty path or "-" means stdout.
void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

struct DataArgs {
  std::string corpus;
  std::string trees;
  std::string format = "canonical";
};

struct EncoderArgs {
  std::string backend = "tfidf";
  std::string vectors;
  std::string ids;
  std::string model;
  std::string mode = "single";
};

void AddData(CLI::App* app, DataArgs& d, bool trees_required) {
  app->add_option("--corpus", d.corpus, "Corpus JSON Lines (id, text)");
  auto* t = app->add_option("--trees", d.trees, "Tree JSON Lines");
  if (trees_required) t->required();
  app->add_option("--format", d.format, "Tree format")
      ->check(CLI::IsMember({"canonical", "eb"}));
}

void AddEncoder(CLI::App* app, EncoderArgs& e, const std::string& mode_flag = "--mode") {
  app->add_option("--backend", e.backend, "Base embeddings")
      ->check(CLI::IsMember({"tfidf", "import"}));
  app->add_option("--vectors", e.vectors, "EMB vectors file (import backend)");
  app->add_option("--ids", e.ids, "Id-per-line file (import backend)");
  app->add_option("--model", e.model, "Trained adapter directory");
  app->add_option(mode_flag, e.mode, "Encoder configuration for an untrained stack")
      ->check(CLI::IsMember({"single", "siamese", "dual"}));
}

Dataset LoadData(const DataArgs& d) {
  const TreeFormat format =
      d.format == "eb" ? TreeFormat::kEntailmentBank : TreeFormat::kCanonical;
  std::optional<fs::path> corpus;
  if (!d.corpus.empty()) corpus = d.corpus;
  if (!d.trees.empty()) return IngestTrees(d.trees, format, corpus);
  if (!corpus) throw UsageError("--corpus or --trees is required");
  Dataset ds;
  ds.corpus = LoadCorpus(*corpus);
  return ds;
}

std::shared_ptr<const BaseEncoder> LoadBase(const EncoderArgs& e, const Corpus& corpus) {
  if (e.backend == "tfidf") return BaseEncoder::FromTfidf(corpus);
  if (e.vectors.empty() || e.ids.empty()) {
    throw UsageError("--backend import needs --vectors and --ids");
  }
  return BaseEncoder::FromEmbeddings(LoadEmbeddings(e.vectors, e.ids));
}

EncoderStack LoadStack(const EncoderArgs& e, std::shared_ptr<const BaseEncoder> base) {
  if (!e.model.empty()) return EncoderStack::Load(e.model, std::move(base));
  return EncoderStack(std::move(base), ParseMode(e.mode));
}

std::vector<const Fact*> Roots(const Dataset& ds) {
  std::vector<const Fact*> out;
  for (const auto& t : ds.trees) out.push_back(&ds.corpus.At(t.root.fact_id));
  return out;
}

struct TrainArgs {
  std::string loss = "tml";
  double margin = 0.1;
  double alpha = 0.1;
  double temperature = 0.05;
  double lr = 1e-5;
  std::size_t batch = 32;
  int epochs = 5;
  std::uint64_t seed = 0;
};

void AddTrain(CLI::App* app, TrainArgs& t) {
  app->add_option("--loss", t.loss, "Contrastive loss")
      ->check(CLI::IsMember({"tml", "scl"}));
  app->add_option("--margin", t.margin, "Triplet margin");
  app->add_option("--alpha", t.alpha, "Regularization weight");
  app->add_option("--temperature", t.temperature, "SCL temperature");
  app->add_option("--lr", t.lr, "Learning rate");
  app->add_option("--batch", t.batch, "Mini-batch size");
  app->add_option("--epochs", t.epochs, "Training epochs");
  app->add_option("--seed", t.seed, "Seed for every stochastic step");
}

TrainConfig MakeTrainConfig(const TrainArgs& t, EncoderMode mode) {
  TrainConfig cfg;
  cfg.loss = ParseLoss(t.loss);
  cfg.margin = t.margin;
  cfg.alpha = t.alpha;
  cfg.temperature = t.temperature;
  cfg.learning_rate = t.lr;
  cfg.batch_size = t.batch;
  cfg.epochs = t.epochs;
  cfg.mode = mode;
  cfg.seed = t.seed;
  Validate(cfg);
  return cfg;
}

int RunIngest(const DataArgs& d, const std::string& out) {
  const Dataset ds = LoadData(d);
  fs::create_directories(out);
  WriteText((fs::path(out) / "corpus.jsonl").string(), SerializeCorpus(ds.corpus));
  WriteText((fs::path(out) / "trees.jsonl").string(), SerializeTrees(ds.corpus, ds.trees));
  std::size_t pairs = 0;
  for (const auto& t : ds.trees) pairs += ExtractPairs(t).size();
  std::cout << Dump({{"facts", ds.corpus.size()},
                     {"trees", ds.trees.size()},
                     {"pairs", pairs},
                     {"max_depth", MaxTreeDepth(ds.trees)}});
  return 0;
}

int RunEncode(const DataArgs& d, const EncoderArgs& e, const std::string& out, bool dense) {
  const Dataset ds = LoadData(d);
  const auto base = LoadBase(e, ds.corpus);
  fs::create_directories(out);
  const fs::path dir(out);
  std::size_t zero = 0;
  for (const auto& f : ds.corpus.facts()) {
    const Vector v = base->Embed(f);
    if (Norm(v) == 0.0) ++zero;
  }
  if (const TfidfModel* tfidf = base->tfidf()) {
    std::ostringstream vocab;
    vocab.precision(17);
    for (std::size_t i = 0; i < tfidf->dim(); ++i) {
      vocab << tfidf->vocabulary()[i] << '\t' << tfidf->idf(i) << '\n';
    }
    WriteText((dir / "vocabulary.tsv").string(), vocab.str());
  }
  if (dense || !base->text_capable()) {
    std::vector<std::string> ids;
    std::vector<double> values;
    for (const auto& f : ds.corpus.facts()) {
      ids.push_back(f.id);
      for (double x : base->Embed(f)) values.push_back(x);
    }
    SaveEmbeddings(EmbeddingMatrix(ids, base->dim(), values), dir / "vectors.emb",
                   dir / "ids.txt");
  }
  const json summary = {{"backend", e.backend},
                        {"dim", base->dim()},
                        {"facts", ds.corpus.size()},
                        {"zero_vectors", zero}};
  WriteText((dir / "encoder.json").string(), Dump(summary));
  std::cout << Dump(summary);
  return 0;
}

int RunIndex(const DataArgs& d, const EncoderArgs& e, const std::string& out,
             const std::vector<std::string>& queries, std::size_t k) {
  const Dataset ds = LoadData(d);
  const EncoderStack stack = LoadStack(e, LoadBase(e, ds.corpus));
  const PremiseIndex index = BuildIndex(stack, ds.corpus);
  json j = {{"size", index.size()},
            {"dim", index.dim()},
            {"sparse", index.is_sparse()},
            {"zero_rows", index.zero_rows()},
            {"generation", index.generation()}};
  if (!queries.empty()) {
    json results = json::object();
    for (const auto& q : queries) {
      json hits = json::array();
      for (const auto& h : RetrieveTopK(index, stack, ds.corpus.At(q),
                                        {.k = k, .exclude_self = true})) {
        hits.push_back({{"fact_id", h.fact_id}, {"score", h.score}});
      }
      results[q] = hits;
    }
    j["results"] = results;
  }
  WriteText(out, Dump(j));
  return 0;
}

int RunPairs(const DataArgs& d, const std::string& out) {
  const Dataset ds = LoadData(d);
  std::string text;
  for (const auto& t : ds.trees) {
    for (const auto& [p, c] : ExtractPairs(t)) {
      text += json{{"tree", t.id},
                   {"parent", p},
                   {"child", c},
                   {"overlap", JaccardOverlap(ds.corpus.At(p), ds.corpus.At(c))}}
                  .dump() +
              "\n";
    }
  }
  WriteText(out, text);
  return 0;
}

int RunTriplets(const DataArgs& d, const std::string& out, std::size_t random_negatives,
                std::uint64_t seed) {
  const Dataset ds = LoadData(d);
  const TripletStore store = BuildGoldTriplets(
      ds.trees, ds.corpus, {random_negatives > 0, random_negatives, seed});
  WriteText(out, SerializeTriplets(store));
  return 0;
}

struct SampleArgs {
  std::string mode = "ae-enc";
  std::vector<std::string> queries;
  std::size_t k = 20;
  int depth = 0;
  int rounds = 1;
  double mix = 0.5;
  std::size_t negatives_per_positive = 4;
  std::string out;
  std::string model_out;
};

int RunSample(const DataArgs& d, const EncoderArgs& e, const TrainArgs& t,
              const SampleArgs& s) {
  const Dataset ds = LoadData(d);
  if (ds.trees.empty()) throw UsageError("sample needs --trees for the gold oracle");
  const EncoderStack stack = LoadStack(e, LoadBase(e, ds.corpus));
  const PremiseIndex index = BuildIndex(stack, ds.corpus);
  GoldOracle oracle(ds.trees);
  AcsOptions acs;
  acs.k = s.k;
  acs.depth_budget = s.depth > 0 ? s.depth : std::max(1, MaxTreeDepth(ds.trees));

  SamplePools pools;
  if (s.mode == "acs") {
    if (s.queries.empty()) throw UsageError("--mode acs needs --query");
    for (const auto& q : s.queries) {
      pools.Merge(Acs(ds.corpus.At(q), index, stack, ds.corpus, oracle, acs));
    }
  } else if (s.rounds <= 1) {
    pools = AeEnc(Roots(ds), index, stack, ds.corpus, oracle, acs);
  } else {
    IterativeConfig cfg;
    cfg.acs = acs;
    cfg.rounds = s.rounds;
    cfg.train = MakeTrainConfig(t, stack.mode());
    cfg.compose.mix_ratio = s.mix;
    cfg.compose.negatives_per_positive = s.negatives_per_positive;
    cfg.compose.seed = t.seed;
    const TripletStore gold = BuildGoldTriplets(ds.trees, ds.corpus);
    IterativeResult r =
        ResampleIterative(Roots(ds), ds.corpus, gold, oracle, stack, index, cfg);
    pools = r.snapshots.back();
    if (!s.model_out.empty()) r.stack.Save(s.model_out);
  }
  WriteText(s.out, SerializePools(pools));
  std::cerr << "positives " << pools.positives.size() << ", negatives "
            << pools.negatives.size() << "\n";
  return 0;
}

struct TrainIo {
  std::string triplets;
  std::string pools;
  std::size_t random_negatives = 0;
  double mix = 0.5;
  std::size_t negatives_per_positive = 4;
  std::string out;
};

int RunTrain(const DataArgs& d, const EncoderArgs& e, const TrainArgs& t,
             const TrainIo& io, bool mode_given) {
  const Dataset ds = LoadData(d);
  const auto base = LoadBase(e, ds.corpus);
  const EncoderStack stack = LoadStack(e, base);
  if (mode_given && !e.model.empty() && ParseMode(e.mode) != stack.mode()) {
    throw UsageError("--mode disagrees with the mode saved in --model");
  }
  const TrainConfig cfg = MakeTrainConfig(t, stack.mode());

  TripletStore training;
  std::vector<std::string> warnings;
  if (!io.triplets.empty()) {
    training = ParseTriplets(ReadText(io.triplets));
    ValidateTriplets(training, ds.corpus);
  } else {
    const TripletStore gold = BuildGoldTriplets(
        ds.trees, ds.corpus, {io.random_negatives > 0, io.random_negatives, t.seed});
    if (io.pools.empty()) {
      training = gold;
    } else {
      ComposeOptions compose;
      compose.mix_ratio = io.mix;
      compose.negatives_per_positive = io.negatives_per_positive;
      compose.seed = t.seed;
      ComposeResult composed = ComposeTrainingSet(
          PoolsFromJson(json::parse(ReadText(io.pools))), gold, ds.corpus, compose);
      training = std::move(composed.store);
      if (!composed.fallback_queries.empty()) {
        warnings.push_back(std::to_string(composed.fallback_queries.size()) +
                           " queries short of active negatives");
      }
    }
  }
  if (training.records.empty()) throw std::runtime_error("no training triplets");
  FineTuneResult result = FineTune(training, ds.corpus, stack, cfg);
  for (auto& w : warnings) result.report.warnings.push_back(std::move(w));
  result.stack.Save(io.out);
  WriteText((fs::path(io.out) / "report.json").string(), Dump(ToJson(result.report)));
  std::cerr << "trained " << result.report.steps << " steps on "
            << training.records.size() << " triplets\n";
  return 0;
}

int RunEval(const DataArgs& d, const EncoderArgs& e, const MetricsOptions& m,
            const std::string& out) {
  const Dataset ds = LoadData(d);
  const EncoderStack stack = LoadStack(e, LoadBase(e, ds.corpus));
  const PremiseIndex index = BuildIndex(stack, ds.corpus);
  const MetricsReport report = EvaluateRankings(ds.trees, ds.corpus, index, stack, m);
  WriteText(out, Dump(ToJson(report, m.per_query)));
  return 0;
}

int RunBiasReport(const DataArgs& d, const EncoderArgs& e, std::size_t k,
                  const std::string& rule, bool exclude_self, const std::string& out,
                  const std::string& summary_out, const std::string& pairs_out) {
  const Dataset ds = LoadData(d);
  const EncoderStack stack = LoadStack(e, LoadBase(e, ds.corpus));
  const PremiseIndex index = BuildIndex(stack, ds.corpus);
  const PairClassification c = ClassifyPairs(
      ds.trees, ds.corpus, index, stack, k,
      rule == "outside-tree" ? FalsePositiveRule::kOutsideTree
                             : FalsePositiveRule::kNonGoldPair,
      exclude_self);
  const BiasReport report = MakeBiasReport(c, ds.corpus, stack);
  WriteText(out, BiasReportCsv(report));
  json summary = BiasSummaryJson(report);
  summary["counts"] = {{"tp", c.tps.size()}, {"fn", c.fns.size()}, {"fp", c.fps.size()}};
  if (!summary_out.empty()) WriteText(summary_out, Dump(summary));
  if (!pairs_out.empty()) WriteText(pairs_out, Dump(ToJson(c)));
  std::cerr << "tp " << c.tps.size() << ", fn " << c.fns.size() << ", fp "
            << c.fps.size() << "\n";
  return 0;
}

int RunSynth(const std::string& preset, std::uint64_t seed, const std::string& out) {
  if (preset != "biased") throw UsageError("unknown preset " + preset);
  const SynthDataset data = GenerateBiased(BiasedPreset(), seed);
  WriteSynth(data, out);
  std::cout << Dump({{"facts", data.corpus.size()},
                     {"train_trees", data.train.size()},
                     {"test_trees", data.test.size()}});
  return 0;
}

struct ServeArgs {
  std::string state_dir = "aeenc-state";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t k = 20;
};

int RunServe(const DataArgs& d, const EncoderArgs& e, const TrainArgs& t,
             const ServeArgs& s) {
  // Signals are taken synchronously by this thread; every thread spawned
  // below inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Dataset ds = LoadData(d);
  const auto base = LoadBase(e, ds.corpus);
  const EncoderMode mode = ParseMode(e.mode);
  ServiceOptions options;
  options.state_dir = s.state_dir;
  options.default_k = s.k;
  options.train = MakeTrainConfig(t, mode);
  options.compose.seed = t.seed;
  Workbench workbench(std::move(ds.corpus), std::move(ds.trees), base, mode, options);
  HttpService http(workbench);
  const int port = http.Bind(s.host, s.port);
  std::cout << "listening on http://" << s.host << ":" << port << std::endl;

  std::thread server([&] { http.Serve(); });
  int sig = 0;
  sigwait(&signals, &sig);
  http.Stop();
  server.join();
  workbench.WaitForTraining();
  return 0;
}

int RunExperiment(const std::vector<std::uint64_t>& seeds, const std::string& out) {
  const BenchmarkResult r = RunSynthBenchmark(BiasedPreset(), seeds);
  WriteText(out, Dump(ToJson(r)));
  for (const auto& [name, m] : r.median_map) {
    std::fprintf(stderr, "%-18s %.4f\n", name.c_str(), m);
  }
  return 0;
}

// Expands --config FILE into explicit flags appended after the ones given on
// the command line. Keys already given as flags are skipped.
std::vector<std::string> ExpandConfig(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;
  json cfg;
  try {
    cfg = json::parse(ReadText(path));
  } catch (const std::exception& ex) {
    throw UsageError("bad --config: " + std::string(ex.what()));
  }
  if (!cfg.is_object()) throw UsageError("--config must hold a JSON object");
  auto given = [&](const std::string& flag) {
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_array()) {
      for (const auto& v : value) {
        if (!text.empty()) text += ",";
        text += v.is_string() ? v.get<std::string>() : v.dump();
      }
    } else {
      text = value.is_string() ? value.get<std::string>() : value.dump();
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

int Main(int argc, char** argv) {
  CLI::App app{"Active entailment encoding workbench"};
  app.require_subcommand(1);

  DataArgs data;
  EncoderArgs enc;
  TrainArgs train;
  std::string out;

  auto* ingest = app.add_subcommand("ingest", "Normalize a tree file into corpus + trees");
  AddData(ingest, data, true);
  ingest->add_option("--out", out, "Output directory")->required();

  bool dense = false;
  auto* encode = app.add_subcommand("encode", "Fit or import base embeddings");
  AddData(encode, data, false);
  AddEncoder(encode, enc);
  encode->add_option("--out", out, "Output directory")->required();
  encode->add_flag("--dense", dense, "Also write the dense tf-idf table");

  std::vector<std::string> queries;
  std::size_t k = 20;
  auto* index = app.add_subcommand("index", "Build the premise index");
  AddData(index, data, false);
  AddEncoder(index, enc);
  index->add_option("--query", queries, "Fact ids to retrieve for")->delimiter(',');
  index->add_option("--k", k, "Candidates per query");
  index->add_option("--out", out, "Summary JSON (default stdout)");

  auto* pairs = app.add_subcommand("pairs", "Parent-child pairs of every tree");
  AddData(pairs, data, true);
  pairs->add_option("--out", out, "Pairs JSON Lines (default stdout)");

  std::size_t random_negatives = 0;
  auto* triplets = app.add_subcommand("triplets", "Gold triplets from tree distractors");
  AddData(triplets, data, true);
  triplets->add_option("--random-negatives", random_negatives,
                       "Random negatives for trees without distractors");
  triplets->add_option("--seed", train.seed, "Seed");
  triplets->add_option("--out", out, "Triplets JSON Lines (default stdout)");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Active contrastive sampling with the gold oracle");
  AddData(sample, data, true);
  AddEncoder(sample, enc, "--encoder-mode");
  AddTrain(sample, train);
  sample->add_option("--mode", sample_args.mode, "acs or ae-enc")
      ->check(CLI::IsMember({"acs", "ae-enc"}));
  sample->add_option("--query", sample_args.queries, "Query ids (acs)")->delimiter(',');
  sample->add_option("--k", sample_args.k, "Candidates per retrieval");
  sample->add_option("--depth", sample_args.depth, "Depth budget, 0 = deepest tree");
  sample->add_option("--rounds", sample_args.rounds, "Resampling rounds (ae-enc)");
  sample->add_option("--mix", sample_args.mix, "Active share of negatives");
  sample->add_option("--negatives-per-positive", sample_args.negatives_per_positive);
  sample->add_option("--model-out", sample_args.model_out, "Save the iterated model");
  sample->add_option("--out", sample_args.out, "Pools JSON (default stdout)");

  TrainIo train_io;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune the adapters");
  AddData(train_cmd, data, true);
  AddEncoder(train_cmd, enc);
  AddTrain(train_cmd, train);
  train_cmd->add_option("--triplets", train_io.triplets, "Training triplets");
  train_cmd->add_option("--pools", train_io.pools, "Sampled pools to compose with gold");
  train_cmd->add_option("--random-negatives", train_io.random_negatives);
  train_cmd->add_option("--mix", train_io.mix, "Active share of negatives");
  train_cmd->add_option("--negatives-per-positive", train_io.negatives_per_positive);
  train_cmd->add_option("--out", train_io.out, "Model directory")->required();

  MetricsOptions metrics;
  auto* eval = app.add_subcommand("eval", "Retrieval metrics for every tree query");
  AddData(eval, data, true);
  AddEncoder(eval, enc);
  eval->add_option("--k-list", metrics.k_list, "Cutoffs")->delimiter(',');
  eval->add_flag("--any-hit", metrics.any_hit, "Hit@K as any-hit instead of recall");
  eval->add_flag("--per-query", metrics.per_query, "Include per-query rows");
  eval->add_flag("--exclude-self", metrics.exclude_self, "Drop each query from its own ranking");
  eval->add_option("--out", out, "Metrics JSON (default stdout)");

  std::string fp_rule = "non-gold";
  std::string summary_out;
  std::string pairs_out;
  auto* bias = app.add_subcommand("bias-report", "Overlap and score histograms of TP/FN/FP");
  AddData(bias, data, true);
  AddEncoder(bias, enc);
  bias->add_option("--k", k, "Retrieval cutoff");
  bias->add_option("--fp-rule", fp_rule, "False-positive rule")
      ->check(CLI::IsMember({"non-gold", "outside-tree"}));
  bias->add_flag("--exclude-self", metrics.exclude_self, "Drop each query from its own ranking");
  bias->add_option("--out", out, "Histogram CSV (default stdout)");
  bias->add_option("--summary", summary_out, "Summary JSON");
  bias->add_option("--pairs-out", pairs_out, "Classified pairs JSON");

  std::string preset = "biased";
  auto* synth = app.add_subcommand("synth", "Generate the synthetic similarity-bias benchmark");
  synth->add_option("--preset", preset, "Preset")->check(CLI::IsMember({"biased"}));
  synth->add_option("--seed", train.seed, "Seed");
  synth->add_option("--out", out, "Output directory")->required();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "HTTP annotation service");
  AddData(serve, data, true);
  AddEncoder(serve, enc);
  AddTrain(serve, train);
  serve->add_option("--state-dir", serve_args.state_dir, "Logs and trained model");
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port, 0 = any free port");
  serve->add_option("--k", serve_args.k, "Default candidates per query");

  std::vector<std::uint64_t> seeds = {1, 2, 3};
  auto* experiment = app.add_subcommand("experiment", "All variants on the synthetic benchmark");
  experiment->add_option("--seeds", seeds, "Dataset seeds")->delimiter(',');
  experiment->add_option("--out", out, "Results JSON (default stdout)");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = ExpandConfig(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*ingest) return RunIngest(data, out);
    if (*encode) return RunEncode(data, enc, out, dense);
    if (*index) return RunIndex(data, enc, out, queries, k);
    if (*pairs) return RunPairs(data, out);
    if (*triplets) return RunTriplets(data, out, random_negatives, train.seed);
    if (*sample) return RunSample(data, enc, train, sample_args);
    if (*train_cmd) {
      return RunTrain(data, enc, train, train_io, train_cmd->count("--mode") > 0);
    }
    if (*eval) return RunEval(data, enc, metrics, out);
    if (*bias) return RunBiasReport(data, enc, k, fp_rule, metrics.exclude_self, out, summary_out, pairs_out);
    if (*synth) return RunSynth(preset, train.seed, out);
    if (*serve) return RunServe(data, enc, train, serve_args);
    if (*experiment) return RunExperiment(seeds, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace
}  // namespace aeenc

int main(int argc, char** argv) { return aeenc::Main(argc, argv); }
