#ifndef AEENC_SERVICE_H_
#define AEENC_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aeenc/corpus.h"
#include "aeenc/encoder.h"
#include "aeenc/index.h"
#include "aeenc/jsonl.h"
#include "aeenc/sampler.h"
#include "aeenc/trainer.h"
#include "json.hpp"

namespace aeenc {

// Request failure with the HTTP status and the envelope's "error" code.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& detail)
      : std::runtime_error(detail), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceOptions {
  // Holds annotations.jsonl, journal.jsonl and the latest trained model.
  std::filesystem::path state_dir;
  std::size_t default_k = 20;
  // Base settings for /train; request bodies override individual keys.
  TrainConfig train;
  ComposeOptions compose;
  // Random negatives per pair for trees without distractors.
  std::size_t random_negatives = 4;
};

// State behind the HTTP API: annotation sessions, pools, the current model
// generation and the background training job. Every mutation is appended
// to a durable log before it is applied; constructing a workbench on an
// existing state directory replays those logs.
class Workbench {
 public:
  Workbench(Corpus corpus, std::vector<EntailmentTree> gold_trees,
            std::shared_ptr<const BaseEncoder> base, EncoderMode mode,
            ServiceOptions options);
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  nlohmann::json Health() const;
  nlohmann::json Hypotheses() const;
  nlohmann::json Tree(const std::string& session) const;
  std::string CreateSession(const std::string& hypothesis_id);
  // k == 0 uses the default.
  nlohmann::json Query(const std::string& session, const std::string& node_id,
                       std::size_t k) const;
  void Annotate(const std::string& session, const std::string& query_id,
                const std::string& fact_id, const std::string& verdict);
  nlohmann::json AddFact(const std::string& session, const std::string& text);
  void Attach(const std::string& session, const std::string& parent_id,
              const std::string& child_id);
  std::string StartTraining(const nlohmann::json& overrides);
  nlohmann::json TrainingStatus(const std::string& run_id) const;
  void WaitForTraining();
  // Canonical pool serialization.
  std::string Pools() const;
  nlohmann::json Metrics() const;
  std::uint64_t generation() const;

 private:
  struct Session {
    std::string hypothesis;
    std::vector<FactPair> edges;
  };
  struct Model {
    EncoderStack stack;
    PremiseIndex index;
    std::uint64_t generation = 0;
  };
  struct Run {
    std::string status = "queued";
    std::string error;
    std::uint64_t generation = 0;
    nlohmann::json report;
  };

  void Replay();
  void ApplyJournal(const nlohmann::json& op);
  const Session& SessionOrThrow(const std::string& id) const;
  const Fact& FactOrThrow(const std::string& id) const;
  std::shared_ptr<const Model> CurrentModel() const;
  void Train(std::string run_id, TrainConfig cfg);
  void SetRun(const std::string& run_id, const std::function<void(Run&)>& update);

  const std::vector<EntailmentTree> gold_trees_;
  const std::shared_ptr<const BaseEncoder> base_;
  const ServiceOptions options_;

  mutable std::shared_mutex state_mu_;
  Corpus corpus_;
  std::map<std::string, Session> sessions_;
  SamplePools pools_;
  std::size_t session_counter_ = 0;
  std::size_t fact_counter_ = 0;
  std::unique_ptr<DurableAppender> journal_;
  std::unique_ptr<AnnotationLog> annotations_;

  mutable std::mutex model_mu_;
  std::shared_ptr<const Model> model_;

  mutable std::mutex runs_mu_;
  std::map<std::string, Run> runs_;
  std::size_t run_counter_ = 0;
  bool training_ = false;
  std::thread trainer_;
};

// cpp-httplib front end for a Workbench.
class HttpService {
 public:
  explicit HttpService(Workbench& workbench);
  ~HttpService();

  // Port 0 picks a free port. Returns the bound port; throws
  // std::runtime_error when binding fails.
  int Bind(const std::string& host, int port);
  // Blocks until Stop.
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aeenc

#endif  // AEENC_SERVICE_H_
