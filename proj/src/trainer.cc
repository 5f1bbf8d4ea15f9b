#include "aeenc/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "aeenc/errors.h"
#include "aeenc/random.h"

namespace aeenc {

std::string_view LossName(LossKind kind) {
  return kind == LossKind::kTml ? "tml" : "scl";
}

LossKind ParseLoss(std::string_view name) {
  if (name == "tml") return LossKind::kTml;
  if (name == "scl") return LossKind::kScl;
  throw std::invalid_argument("unknown loss \"" + std::string(name) + "\"");
}

nlohmann::json ToJson(const TrainConfig& cfg) {
  return {{"loss", LossName(cfg.loss)},
          {"margin", cfg.margin},
          {"alpha", cfg.alpha},
          {"temperature", cfg.temperature},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"mode", ModeName(cfg.mode)},
          {"seed", cfg.seed}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j, TrainConfig cfg) {
  if (j.contains("loss")) cfg.loss = ParseLoss(j.at("loss").get<std::string>());
  cfg.margin = j.value("margin", cfg.margin);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.epochs = j.value("epochs", cfg.epochs);
  if (j.contains("mode")) cfg.mode = ParseMode(j.at("mode").get<std::string>());
  cfg.seed = j.value("seed", cfg.seed);
  Validate(cfg);
  return cfg;
}

void Validate(const TrainConfig& cfg) {
  if (!(cfg.margin >= 0.0)) throw std::invalid_argument("margin must be >= 0");
  if (!(cfg.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(cfg.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
  if (!(cfg.learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be >= 0");
  }
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
}

double TripletMarginLoss(double s_pos, double s_neg, double margin) {
  return std::max(s_neg - s_pos + margin, 0.0);
}

LossValue SupervisedContrastiveLoss(double s_pos, std::span<const double> s_negs,
                                    double temperature) {
  if (s_negs.empty()) return {0.0, true};
  double top = s_pos / temperature;
  for (double s : s_negs) top = std::max(top, s / temperature);
  double sum = std::exp(s_pos / temperature - top);
  for (double s : s_negs) sum += std::exp(s / temperature - top);
  return {-(s_pos / temperature - top) + std::log(sum), false};
}

namespace {

struct Factors {
  double loss = 0.0;
  double contrastive = 0.0;
  double regularization = 0.0;
  bool degenerate = false;
  bool empty = false;
  Vector dq;
  Vector dp;
  std::vector<Vector> dn;
};

// a/(|a||b|) direction derivative: d cos(a, b) / d a.
void AddCosineGrad(std::span<const double> a, double na,
                   std::span<const double> b, double nb, double cos_ab,
                   double weight, Vector& out) {
  if (weight == 0.0) return;
  const double inv = 1.0 / (na * nb);
  const double self = cos_ab / (na * na);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += weight * (b[i] * inv - self * a[i]);
  }
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Factors ComputeFactors(const EncoderStack& stack, std::span<const double> h_base,
                       std::span<const double> pos_base,
                       std::span<const std::span<const double>> neg_base,
                       const TrainConfig& cfg) {
  Factors f;
  if (neg_base.empty()) {
    f.empty = true;
    return f;
  }
  const Vector q = stack.Apply(h_base, EncodeSide::kQuery);
  const Vector p = stack.Apply(pos_base, EncodeSide::kPremise);
  std::vector<Vector> n;
  n.reserve(neg_base.size());
  for (auto nb : neg_base) n.push_back(stack.Apply(nb, EncodeSide::kPremise));

  const double nq = Norm(q);
  const double np = Norm(p);
  std::vector<double> nn(n.size());
  bool zero = nq == 0.0 || np == 0.0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    nn[j] = Norm(n[j]);
    zero = zero || nn[j] == 0.0;
  }
  if (zero) {
    f.degenerate = true;
    return f;
  }

  const double s_pos = Dot(q, p) / (nq * np);
  std::vector<double> s_neg(n.size());
  for (std::size_t j = 0; j < n.size(); ++j) s_neg[j] = Dot(q, n[j]) / (nq * nn[j]);

  double g_pos = 0.0;
  std::vector<double> g_neg(n.size(), 0.0);
  if (cfg.loss == LossKind::kTml) {
    for (std::size_t j = 0; j < n.size(); ++j) {
      const double l = TripletMarginLoss(s_pos, s_neg[j], cfg.margin);
      f.contrastive += l;
      if (s_neg[j] - s_pos + cfg.margin > 0.0) {
        g_pos -= 1.0;
        g_neg[j] = 1.0;
      }
    }
  } else {
    const double t = cfg.temperature;
    f.contrastive = SupervisedContrastiveLoss(s_pos, s_neg, t).value;
    double top = s_pos / t;
    for (double s : s_neg) top = std::max(top, s / t);
    double z = std::exp(s_pos / t - top);
    for (double s : s_neg) z += std::exp(s / t - top);
    g_pos = (std::exp(s_pos / t - top) / z - 1.0) / t;
    for (std::size_t j = 0; j < n.size(); ++j) {
      g_neg[j] = std::exp(s_neg[j] / t - top) / z / t;
    }
  }

  const double a = cfg.alpha;
  f.regularization = a * SquaredDistance(q, h_base) + a * SquaredDistance(p, pos_base);
  for (std::size_t j = 0; j < n.size(); ++j) {
    f.regularization += a * SquaredDistance(n[j], neg_base[j]);
  }
  f.loss = f.contrastive + f.regularization;

  const std::size_t d = q.size();
  f.dq.assign(d, 0.0);
  AddCosineGrad(q, nq, p, np, s_pos, g_pos, f.dq);
  for (std::size_t j = 0; j < n.size(); ++j) {
    AddCosineGrad(q, nq, n[j], nn[j], s_neg[j], g_neg[j], f.dq);
  }
  for (std::size_t i = 0; i < d; ++i) f.dq[i] += 2.0 * a * (q[i] - h_base[i]);

  f.dp.assign(d, 0.0);
  AddCosineGrad(p, np, q, nq, s_pos, g_pos, f.dp);
  for (std::size_t i = 0; i < d; ++i) f.dp[i] += 2.0 * a * (p[i] - pos_base[i]);
  f.dn.resize(n.size());
  for (std::size_t j = 0; j < n.size(); ++j) {
    f.dn[j].assign(d, 0.0);
    AddCosineGrad(n[j], nn[j], q, nq, s_neg[j], g_neg[j], f.dn[j]);
    for (std::size_t i = 0; i < d; ++i) {
      f.dn[j][i] += 2.0 * a * (n[j][i] - neg_base[j][i]);
    }
  }
  return f;
}

bool PremiseTrainable(const EncoderStack& stack) {
  return stack.mode() != EncoderMode::kSingle;
}

// Appends the rank-one gradient terms of one example. Query-side terms go to
// `query_terms`; premise-side terms go to `premise_terms`, which is the same
// list in siamese mode.
void AppendTerms(const EncoderStack& stack, const Factors& f,
                 std::span<const double> h_base, std::span<const double> pos_base,
                 std::span<const std::span<const double>> neg_base, double scale,
                 std::vector<kernels::OuterTerm>& query_terms,
                 std::vector<kernels::OuterTerm>& premise_terms) {
  query_terms.push_back({f.dq.data(), h_base.data(), scale});
  if (!PremiseTrainable(stack)) return;
  premise_terms.push_back({f.dp.data(), pos_base.data(), scale});
  for (std::size_t j = 0; j < neg_base.size(); ++j) {
    premise_terms.push_back({f.dn[j].data(), neg_base[j].data(), scale});
  }
}

void AddBiasGrad(const EncoderStack& stack, const Factors& f, double scale,
                 Vector& query_bias, Vector& premise_bias) {
  if (stack.query_adapter().has_bias()) {
    for (std::size_t i = 0; i < f.dq.size(); ++i) query_bias[i] += scale * f.dq[i];
  }
  if (!PremiseTrainable(stack) || !stack.premise_adapter().has_bias()) return;
  Vector& dst = stack.shares_adapter() ? query_bias : premise_bias;
  for (std::size_t i = 0; i < f.dp.size(); ++i) dst[i] += scale * f.dp[i];
  for (const auto& dn : f.dn) {
    for (std::size_t i = 0; i < dn.size(); ++i) dst[i] += scale * dn[i];
  }
}

}  // namespace

LossAndGradients RegularizedLoss(const EncoderStack& stack,
                                 std::span<const double> h_base,
                                 std::span<const double> pos_base,
                                 std::span<const std::span<const double>> neg_base,
                                 const TrainConfig& cfg) {
  const std::size_t d = stack.dim();
  LossAndGradients out;
  out.gradients.query = Matrix(d, d);
  if (stack.query_adapter().has_bias()) out.gradients.query_bias.assign(d, 0.0);
  const bool separate_premise = stack.mode() == EncoderMode::kDual;
  if (separate_premise) {
    out.gradients.premise = Matrix(d, d);
    if (stack.premise_adapter().has_bias()) out.gradients.premise_bias.assign(d, 0.0);
  }
  const Factors f = ComputeFactors(stack, h_base, pos_base, neg_base, cfg);
  out.degenerate = f.degenerate;
  out.empty_negatives = f.empty;
  if (f.degenerate || f.empty) return out;
  out.loss = f.loss;
  out.contrastive = f.contrastive;
  out.regularization = f.regularization;

  std::vector<kernels::OuterTerm> q_terms;
  std::vector<kernels::OuterTerm> p_terms;
  AppendTerms(stack, f, h_base, pos_base, neg_base, 1.0, q_terms,
              separate_premise ? p_terms : q_terms);
  kernels::AccumulateOuterSerial(out.gradients.query, q_terms);
  if (separate_premise) kernels::AccumulateOuterSerial(out.gradients.premise, p_terms);
  Vector unused;
  AddBiasGrad(stack, f, 1.0, out.gradients.query_bias,
              separate_premise ? out.gradients.premise_bias : unused);
  return out;
}

LossAndGradients RegularizedLoss(const EncoderStack& stack, const Fact& h,
                                 const Fact& pos, const Fact& neg,
                                 const TrainConfig& cfg) {
  const Vector eh = stack.base().Embed(h);
  const Vector ep = stack.base().Embed(pos);
  const Vector en = stack.base().Embed(neg);
  const std::span<const double> negs[] = {en};
  return RegularizedLoss(stack, eh, ep, negs, cfg);
}

nlohmann::json ToJson(const RunReport& report) {
  return {{"config", ToJson(report.config)},
          {"epoch_losses", report.epoch_losses},
          {"skipped_triplets", report.skipped_triplets},
          {"steps", report.steps},
          {"wall_seconds", report.wall_seconds},
          {"warnings", report.warnings}};
}

std::vector<ContrastiveExample> ExamplesFromTriplets(const TripletStore& store,
                                                     LossKind loss) {
  std::vector<ContrastiveExample> out;
  if (loss == LossKind::kTml) {
    out.reserve(store.records.size());
    for (const auto& r : store.records) out.push_back({r.h_id, r.pos_id, {r.neg_id}});
    return out;
  }
  std::map<FactPair, std::size_t> slot;
  for (const auto& r : store.records) {
    auto [it, inserted] = slot.emplace(FactPair{r.h_id, r.pos_id}, out.size());
    if (inserted) out.push_back({r.h_id, r.pos_id, {}});
    auto& negs = out[it->second].neg_ids;
    if (std::find(negs.begin(), negs.end(), r.neg_id) == negs.end()) {
      negs.push_back(r.neg_id);
    }
  }
  return out;
}

namespace {

// Base vectors for every fact referenced by the examples.
class BaseCache {
 public:
  BaseCache(std::span<const ContrastiveExample> examples, const Corpus& corpus,
            const BaseEncoder& base) {
    auto add = [&](const std::string& id) {
      if (slot_.emplace(id, ids_.size()).second) ids_.push_back(id);
    };
    for (const auto& ex : examples) {
      add(ex.h_id);
      add(ex.pos_id);
      for (const auto& n : ex.neg_ids) add(n);
    }
    std::vector<const Fact*> facts;
    facts.reserve(ids_.size());
    for (const auto& id : ids_) facts.push_back(&corpus.At(id));
    vectors_.resize(ids_.size());
    const auto n = static_cast<std::int64_t>(ids_.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        vectors_[static_cast<std::size_t>(i)] = base.Embed(*facts[static_cast<std::size_t>(i)]);
      } catch (...) {
#pragma omp critical(aeenc_base_cache)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }

  std::span<const double> Get(const std::string& id) const {
    return vectors_[slot_.at(id)];
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> slot_;
  std::vector<Vector> vectors_;
};

struct ExampleView {
  std::span<const double> h;
  std::span<const double> pos;
  std::vector<std::span<const double>> negs;
};

std::vector<ExampleView> MakeViews(std::span<const ContrastiveExample> examples,
                                   const BaseCache& cache) {
  std::vector<ExampleView> views;
  views.reserve(examples.size());
  for (const auto& ex : examples) {
    ExampleView v{cache.Get(ex.h_id), cache.Get(ex.pos_id), {}};
    for (const auto& n : ex.neg_ids) v.negs.push_back(cache.Get(n));
    views.push_back(std::move(v));
  }
  return views;
}

void ApplyStep(Adapter& adapter, const Matrix& grad, const Vector& bias_grad,
               double lr) {
  Matrix& w = adapter.mutable_weights();
  auto wd = w.data();
  auto gd = grad.data();
  for (std::size_t i = 0; i < wd.size(); ++i) wd[i] -= lr * gd[i];
  if (adapter.has_bias()) {
    auto b = adapter.mutable_bias();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * bias_grad[i];
  }
}

}  // namespace

double EvaluateLoss(std::span<const ContrastiveExample> examples,
                    const Corpus& corpus, const EncoderStack& stack,
                    const TrainConfig& cfg) {
  const BaseCache cache(examples, corpus, stack.base());
  const auto views = MakeViews(examples, cache);
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& v : views) {
    const Factors f = ComputeFactors(stack, v.h, v.pos, v.negs, cfg);
    if (f.degenerate) continue;
    total += f.loss;
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

FineTuneResult FineTune(std::span<const ContrastiveExample> examples,
                        const Corpus& corpus, const EncoderStack& stack,
                        const TrainConfig& cfg) {
  Validate(cfg);
  if (examples.empty()) throw std::invalid_argument("no training examples");
  if (cfg.mode != stack.mode()) {
    throw std::invalid_argument("config mode " + std::string(ModeName(cfg.mode)) +
                                " does not match stack mode " +
                                std::string(ModeName(stack.mode())));
  }
  const auto start = std::chrono::steady_clock::now();
  FineTuneResult result{stack, {}};
  result.report.config = cfg;
  EncoderStack& model = result.stack;

  const BaseCache cache(examples, corpus, stack.base());
  const auto views = MakeViews(examples, cache);
  const std::size_t d = stack.dim();
  const bool dual = stack.mode() == EncoderMode::kDual;
  const bool premise_trainable = PremiseTrainable(stack);

  std::vector<std::size_t> order(views.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(cfg.seed);
  std::size_t skipped = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t begin = 0, batch = 0; begin < order.size();
         begin += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const auto n = static_cast<std::int64_t>(end - begin);
      std::vector<Factors> factors(end - begin);
      if (cfg.exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < n; ++i) {
          const auto& v = views[order[begin + static_cast<std::size_t>(i)]];
          factors[static_cast<std::size_t>(i)] = ComputeFactors(model, v.h, v.pos, v.negs, cfg);
        }
      } else {
        for (std::int64_t i = 0; i < n; ++i) {
          const auto& v = views[order[begin + static_cast<std::size_t>(i)]];
          factors[static_cast<std::size_t>(i)] = ComputeFactors(model, v.h, v.pos, v.negs, cfg);
        }
      }

      std::size_t used = 0;
      for (std::size_t i = 0; i < factors.size(); ++i) {
        const Factors& f = factors[i];
        if (f.degenerate) {
          if (epoch == 0) ++skipped;
          continue;
        }
        if (!std::isfinite(f.loss)) {
          const auto& ex = examples[order[begin + i]];
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch) + " (h=" + ex.h_id +
                              ", pos=" + ex.pos_id + ")");
        }
        epoch_loss += f.loss;
        ++epoch_count;
        if (!f.empty) ++used;
      }
      if (used == 0 || cfg.learning_rate == 0.0) continue;

      const double scale = 1.0 / static_cast<double>(used);
      std::vector<kernels::OuterTerm> q_terms;
      std::vector<kernels::OuterTerm> p_terms;
      Vector q_bias(d, 0.0);
      Vector p_bias(d, 0.0);
      for (std::size_t i = 0; i < factors.size(); ++i) {
        const Factors& f = factors[i];
        if (f.degenerate || f.empty) continue;
        const auto& v = views[order[begin + i]];
        AppendTerms(model, f, v.h, v.pos, v.negs, scale, q_terms,
                    dual ? p_terms : q_terms);
        AddBiasGrad(model, f, scale, q_bias, p_bias);
      }
      Matrix q_grad(d, d);
      if (cfg.exec == Execution::kParallel) {
        kernels::AccumulateOuter(q_grad, q_terms);
      } else {
        kernels::AccumulateOuterSerial(q_grad, q_terms);
      }
      ApplyStep(model.mutable_query_adapter(), q_grad, q_bias, cfg.learning_rate);
      if (dual && premise_trainable) {
        Matrix p_grad(d, d);
        if (cfg.exec == Execution::kParallel) {
          kernels::AccumulateOuter(p_grad, p_terms);
        } else {
          kernels::AccumulateOuterSerial(p_grad, p_terms);
        }
        ApplyStep(model.mutable_premise_adapter(), p_grad, p_bias, cfg.learning_rate);
      }
      ++result.report.steps;
    }
    const double mean = epoch_count ? epoch_loss / static_cast<double>(epoch_count) : 0.0;
    if (!result.report.epoch_losses.empty() &&
        mean > result.report.epoch_losses.back() + 1e-12) {
      result.report.warnings.push_back("epoch " + std::to_string(epoch) +
                                       " mean loss increased");
    }
    result.report.epoch_losses.push_back(mean);
  }
  result.report.skipped_triplets = skipped;
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

FineTuneResult FineTune(const TripletStore& triplets, const Corpus& corpus,
                        const EncoderStack& stack, const TrainConfig& cfg) {
  const auto examples = ExamplesFromTriplets(triplets, cfg.loss);
  return FineTune(examples, corpus, stack, cfg);
}

}  // namespace aeenc
