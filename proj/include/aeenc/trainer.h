#ifndef AEENC_TRAINER_H_
#define AEENC_TRAINER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/kernels.h"
#include "json.hpp"

namespace aeenc {

enum class LossKind { kTml, kScl };

std::string_view LossName(LossKind kind);
LossKind ParseLoss(std::string_view name);

struct TrainConfig {
  LossKind loss = LossKind::kTml;
  double margin = 0.1;
  double alpha = 0.1;
  double temperature = 0.05;
  std::size_t batch_size = 32;
  double learning_rate = 1e-5;
  int epochs = 5;
  EncoderMode mode = EncoderMode::kSingle;
  std::uint64_t seed = 0;
  Execution exec = Execution::kParallel;
};

nlohmann::json ToJson(const TrainConfig& cfg);
// Missing keys keep their defaults. Throws std::invalid_argument on an
// out-of-range value.
TrainConfig TrainConfigFromJson(const nlohmann::json& j, TrainConfig base = {});
void Validate(const TrainConfig& cfg);

// max(s_neg - s_pos + m, 0).
double TripletMarginLoss(double s_pos, double s_neg, double margin);

struct LossValue {
  double value = 0.0;
  // Set when there was nothing to contrast (no negatives).
  bool flagged = false;
};

// -log(exp(s_pos/t) / (exp(s_pos/t) + sum_j exp(s_neg_j/t))), evaluated with
// a max-shift for stability.
LossValue SupervisedContrastiveLoss(double s_pos, std::span<const double> s_negs,
                                    double temperature);

// One query, one positive, any number of negatives. A triplet is the
// single-negative case.
struct ContrastiveExample {
  std::string h_id;
  std::string pos_id;
  std::vector<std::string> neg_ids;
};

struct AdapterGradients {
  Matrix query;
  Vector query_bias;
  // Empty unless the premise adapter is trainable and distinct.
  Matrix premise;
  Vector premise_bias;
};

struct LossAndGradients {
  double loss = 0.0;
  double contrastive = 0.0;
  double regularization = 0.0;
  AdapterGradients gradients;
  // Zero embedding somewhere in the example: loss 0, zero gradient.
  bool degenerate = false;
  // SCL/TML with no negatives: loss 0, zero gradient.
  bool empty_negatives = false;
};

// Contrastive loss on cosine scores plus alpha-weighted squared distances
// between each adapted encoding and its fixed base encoding (one term for
// the query, one per premise). Gradients are exact derivatives with respect
// to every trainable adapter; frozen adapters receive none. In siamese mode
// both sides' contributions land in `gradients.query`.
LossAndGradients RegularizedLoss(const EncoderStack& stack,
                                 std::span<const double> h_base,
                                 std::span<const double> pos_base,
                                 std::span<const std::span<const double>> neg_base,
                                 const TrainConfig& cfg);

LossAndGradients RegularizedLoss(const EncoderStack& stack, const Fact& h,
                                 const Fact& pos, const Fact& neg,
                                 const TrainConfig& cfg);

struct RunReport {
  TrainConfig config;
  std::vector<double> epoch_losses;
  std::size_t skipped_triplets = 0;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

nlohmann::json ToJson(const RunReport& report);

struct FineTuneResult {
  EncoderStack stack;
  RunReport report;
};

// Triplets are trained one example per record under TML; SCL groups records
// sharing (h, pos) into one example with all their negatives.
std::vector<ContrastiveExample> ExamplesFromTriplets(const TripletStore& store,
                                                     LossKind loss);

// Mini-batch gradient descent over seeded shuffles. Throws TrainingError on
// a non-finite loss, std::invalid_argument on an empty example set or a
// config/stack mode mismatch.
FineTuneResult FineTune(std::span<const ContrastiveExample> examples,
                        const Corpus& corpus, const EncoderStack& stack,
                        const TrainConfig& cfg);
FineTuneResult FineTune(const TripletStore& triplets, const Corpus& corpus,
                        const EncoderStack& stack, const TrainConfig& cfg);

// Mean regularized loss of every example under the stack, no updates.
double EvaluateLoss(std::span<const ContrastiveExample> examples,
                    const Corpus& corpus, const EncoderStack& stack,
                    const TrainConfig& cfg);

}  // namespace aeenc

#endif  // AEENC_TRAINER_H_
