#include "aeenc/service.h"

#include <fstream>
#include <sstream>

#include "aeenc/errors.h"
#include "aeenc/evaluator.h"
#include "httplib.h"

namespace aeenc {

namespace {

constexpr char kJournal[] = "journal.jsonl";
constexpr char kAnnotations[] = "annotations.jsonl";
constexpr char kModelDir[] = "model";

ServiceError NotFound(const std::string& what) { return {404, "not_found", what}; }
ServiceError BadRequest(const std::string& what) { return {400, "bad_request", what}; }
ServiceError Conflict(const std::string& what) { return {409, "conflict", what}; }

std::uint64_t ReadGeneration(const std::filesystem::path& dir) {
  std::ifstream in(dir / "generation");
  std::uint64_t g = 0;
  in >> g;
  return g;
}

}  // namespace

Workbench::Workbench(Corpus corpus, std::vector<EntailmentTree> gold_trees,
                     std::shared_ptr<const BaseEncoder> base, EncoderMode mode,
                     ServiceOptions options)
    : gold_trees_(std::move(gold_trees)),
      base_(std::move(base)),
      options_(std::move(options)),
      corpus_(std::move(corpus)) {
  std::filesystem::create_directories(options_.state_dir);
  const auto model_dir = options_.state_dir / kModelDir;
  auto model = std::make_shared<Model>(Model{EncoderStack(base_, mode), {}, 0});
  if (std::filesystem::exists(model_dir / "mode.json")) {
    model->stack = EncoderStack::Load(model_dir, base_);
    model->generation = ReadGeneration(model_dir);
  }
  Replay();
  model->index = BuildIndex(model->stack, corpus_);
  model_ = std::move(model);
  journal_ = std::make_unique<DurableAppender>(options_.state_dir / kJournal);
  annotations_ = std::make_unique<AnnotationLog>(options_.state_dir / kAnnotations);
}

Workbench::~Workbench() {
  if (trainer_.joinable()) trainer_.join();
}

void Workbench::Replay() {
  ReadJsonLines(options_.state_dir / kJournal,
                [&](std::size_t, const nlohmann::json& op) { ApplyJournal(op); });
  pools_ = PoolsFromAnnotations(AnnotationLog::Replay(options_.state_dir / kAnnotations));
}

void Workbench::ApplyJournal(const nlohmann::json& op) {
  const std::string kind = op.at("op").get<std::string>();
  const std::string session = op.at("session").get<std::string>();
  if (kind == "session") {
    sessions_[session] = Session{op.at("hypothesis").get<std::string>(), {}};
    ++session_counter_;
  } else if (kind == "fact") {
    corpus_.Add(Fact::Make(op.at("fact_id").get<std::string>(), op.at("text").get<std::string>()));
    ++fact_counter_;
  } else if (kind == "attach") {
    sessions_.at(session).edges.emplace_back(op.at("parent").get<std::string>(),
                                             op.at("child").get<std::string>());
  } else {
    throw std::runtime_error("unknown journal op \"" + kind + "\"");
  }
}

const Workbench::Session& Workbench::SessionOrThrow(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session \"" + id + "\"");
  return it->second;
}

const Fact& Workbench::FactOrThrow(const std::string& id) const {
  const Fact* f = corpus_.Find(id);
  if (f == nullptr) throw NotFound("unknown fact \"" + id + "\"");
  return *f;
}

std::shared_ptr<const Workbench::Model> Workbench::CurrentModel() const {
  std::lock_guard lock(model_mu_);
  return model_;
}

std::uint64_t Workbench::generation() const { return CurrentModel()->generation; }

nlohmann::json Workbench::Health() const {
  return {{"status", "ok"}, {"index_generation", generation()}};
}

nlohmann::json Workbench::Hypotheses() const {
  std::shared_lock lock(state_mu_);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& tree : gold_trees_) {
    out.push_back({{"id", tree.root.fact_id},
                   {"text", corpus_.At(tree.root.fact_id).text},
                   {"tree", tree.id}});
  }
  return out;
}

nlohmann::json Workbench::Tree(const std::string& session) const {
  std::shared_lock lock(state_mu_);
  const Session& s = SessionOrThrow(session);
  const EntailmentTree tree = BuildTree(session, s.hypothesis, s.edges, {});
  nlohmann::json nodes = nlohmann::json::array();
  std::vector<const TreeNode*> stack = {&tree.root};
  while (!stack.empty()) {
    const TreeNode* n = stack.back();
    stack.pop_back();
    nodes.push_back({{"id", n->fact_id},
                     {"text", corpus_.At(n->fact_id).text},
                     {"role", RoleName(n->role)}});
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : ExtractPairs(tree)) edges.push_back({p, c});
  return {{"session", session},
          {"hypothesis", s.hypothesis},
          {"nodes", nodes},
          {"edges", edges},
          {"depth", TreeDepth(tree)}};
}

std::string Workbench::CreateSession(const std::string& hypothesis_id) {
  std::unique_lock lock(state_mu_);
  FactOrThrow(hypothesis_id);
  const std::string id = "s" + std::to_string(session_counter_ + 1);
  const nlohmann::json op = {{"op", "session"}, {"session", id}, {"hypothesis", hypothesis_id}};
  journal_->AppendLine(op.dump());
  ApplyJournal(op);
  return id;
}

nlohmann::json Workbench::Query(const std::string& session, const std::string& node_id,
                                std::size_t k) const {
  std::shared_lock lock(state_mu_);
  SessionOrThrow(session);
  const Fact& node = FactOrThrow(node_id);
  if (!base_->CanEmbed(node)) {
    throw ServiceError(422, "unencodable",
                       "fact \"" + node_id + "\" has no embedding under the import-only base");
  }
  const auto model = CurrentModel();
  RetrieveOptions options;
  options.k = k == 0 ? options_.default_k : k;
  options.exclude_self = true;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : RetrieveTopK(model->index, model->stack, node, options)) {
    out.push_back({{"fact_id", s.fact_id}, {"text", corpus_.At(s.fact_id).text}, {"score", s.score}});
  }
  return out;
}

void Workbench::Annotate(const std::string& session, const std::string& query_id,
                         const std::string& fact_id, const std::string& verdict) {
  if (verdict != "pos" && verdict != "neg") {
    throw BadRequest("verdict must be \"pos\" or \"neg\"");
  }
  if (query_id == fact_id) throw BadRequest("a fact cannot explain itself");
  std::unique_lock lock(state_mu_);
  SessionOrThrow(session);
  FactOrThrow(query_id);
  FactOrThrow(fact_id);
  const bool positive = verdict == "pos";
  annotations_->Append({query_id, fact_id, positive, NowIso8601(), session});
  if (positive) {
    pools_.AddPositive(query_id, fact_id);
  } else {
    pools_.AddNegative(query_id, fact_id);
  }
}

nlohmann::json Workbench::AddFact(const std::string& session, const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw BadRequest("fact text is empty");
  }
  std::unique_lock lock(state_mu_);
  SessionOrThrow(session);
  std::size_t n = fact_counter_;
  std::string id;
  do {
    id = "manual-" + std::to_string(++n);
  } while (corpus_.Contains(id));
  const nlohmann::json op = {{"op", "fact"}, {"session", session}, {"fact_id", id}, {"text", text}};
  journal_->AppendLine(op.dump());
  ApplyJournal(op);
  const bool encodable = base_->CanEmbed(corpus_.At(id));
  nlohmann::json out = {{"fact_id", id}, {"encodable", encodable}};
  if (!encodable) out["warning"] = "import-only base: fact cannot be used as a retrieval query";
  return out;
}

void Workbench::Attach(const std::string& session, const std::string& parent_id,
                       const std::string& child_id) {
  std::unique_lock lock(state_mu_);
  const Session& s = SessionOrThrow(session);
  FactOrThrow(parent_id);
  FactOrThrow(child_id);
  auto edges = s.edges;
  edges.emplace_back(parent_id, child_id);
  try {
    BuildTree(session, s.hypothesis, edges, {});
  } catch (const IntegrityError& e) {
    throw Conflict(e.what());
  }
  const nlohmann::json op = {
      {"op", "attach"}, {"session", session}, {"parent", parent_id}, {"child", child_id}};
  journal_->AppendLine(op.dump());
  ApplyJournal(op);
}

std::string Workbench::Pools() const {
  std::shared_lock lock(state_mu_);
  return SerializePools(pools_);
}

nlohmann::json Workbench::Metrics() const {
  std::shared_lock lock(state_mu_);
  const auto model = CurrentModel();
  nlohmann::json out = ToJson(EvaluateRankings(gold_trees_, corpus_, model->index, model->stack));
  out["index_generation"] = model->generation;
  return out;
}

std::string Workbench::StartTraining(const nlohmann::json& overrides) {
  TrainConfig cfg;
  try {
    cfg = TrainConfigFromJson(overrides, options_.train);
  } catch (const std::invalid_argument& e) {
    throw BadRequest(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw BadRequest(e.what());
  }
  const auto model = CurrentModel();
  if (overrides.contains("mode") && cfg.mode != model->stack.mode()) {
    throw BadRequest("the service encoder runs in " + std::string(ModeName(model->stack.mode())) +
                     " mode");
  }
  cfg.mode = model->stack.mode();
  std::lock_guard lock(runs_mu_);
  if (training_) throw Conflict("a training run is already in progress");
  if (trainer_.joinable()) trainer_.join();
  const std::string run_id = "r" + std::to_string(++run_counter_);
  runs_[run_id] = Run{};
  training_ = true;
  trainer_ = std::thread([this, run_id, cfg] { Train(run_id, cfg); });
  return run_id;
}

void Workbench::SetRun(const std::string& run_id, const std::function<void(Run&)>& update) {
  std::lock_guard lock(runs_mu_);
  update(runs_.at(run_id));
}

void Workbench::Train(std::string run_id, TrainConfig cfg) {
  SetRun(run_id, [](Run& r) { r.status = "running"; });
  try {
    Corpus corpus;
    SamplePools pools;
    {
      std::shared_lock lock(state_mu_);
      corpus = corpus_;
      pools = pools_;
    }
    const auto model = CurrentModel();
    const TripletStore gold =
        BuildGoldTriplets(gold_trees_, corpus, {true, options_.random_negatives, cfg.seed});
    ComposeOptions compose = options_.compose;
    compose.seed = cfg.seed;
    const ComposeResult composed = ComposeTrainingSet(pools, gold, corpus, compose);
    if (composed.store.records.empty()) {
      throw std::invalid_argument("no training examples: annotate some positives first");
    }
    FineTuneResult tuned = FineTune(composed.store, corpus, model->stack, cfg);
    auto next = std::make_shared<Model>(
        Model{tuned.stack, BuildIndex(tuned.stack, corpus), model->generation + 1});

    const auto dir = options_.state_dir / kModelDir;
    const auto tmp = options_.state_dir / (std::string(kModelDir) + ".tmp");
    std::filesystem::remove_all(tmp);
    next->stack.Save(tmp);
    std::ofstream(tmp / "generation") << next->generation << "\n";
    std::filesystem::remove_all(dir);
    std::filesystem::rename(tmp, dir);

    nlohmann::json report = ToJson(tuned.report);
    report["triplets"] = composed.store.records.size();
    report["fallback_queries"] = composed.fallback_queries;
    {
      std::lock_guard lock(model_mu_);
      model_ = next;
    }
    SetRun(run_id, [&](Run& r) {
      r.status = "done";
      r.generation = next->generation;
      r.report = std::move(report);
    });
  } catch (const std::exception& e) {
    SetRun(run_id, [&](Run& r) {
      r.status = "failed";
      r.error = e.what();
    });
  }
  std::lock_guard lock(runs_mu_);
  training_ = false;
}

nlohmann::json Workbench::TrainingStatus(const std::string& run_id) const {
  std::lock_guard lock(runs_mu_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw NotFound("unknown training run \"" + run_id + "\"");
  nlohmann::json out = {{"run_id", run_id}, {"status", it->second.status}};
  if (it->second.status == "done") {
    out["generation"] = it->second.generation;
    out["report"] = it->second.report;
  }
  if (!it->second.error.empty()) out["error"] = it->second.error;
  return out;
}

void Workbench::WaitForTraining() {
  std::thread t;
  {
    std::lock_guard lock(runs_mu_);
    t = std::move(trainer_);
  }
  if (t.joinable()) t.join();
}

struct HttpService::Impl {
  Workbench& wb;
  httplib::Server server;
};

namespace {

void SendError(httplib::Response& res, int status, const std::string& code,
               const std::string& detail) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", code}, {"detail", detail}}.dump(), "application/json");
}

void SendJson(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json Body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BadRequest(std::string("invalid JSON body: ") + e.what());
  }
  if (!j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

std::string Field(const nlohmann::json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw BadRequest(std::string("missing string field \"") + key + "\"");
  }
  return body.at(key).get<std::string>();
}

template <typename Fn>
httplib::Server::Handler Guard(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      SendError(res, e.status(), e.code(), e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

HttpService::HttpService(Workbench& workbench) : impl_(new Impl{workbench, {}}) {
  auto& s = impl_->server;
  Workbench& wb = impl_->wb;
  s.Get("/health", Guard([&wb](const auto&, auto& res) { SendJson(res, wb.Health()); }));
  s.Get("/hypotheses", Guard([&wb](const auto&, auto& res) { SendJson(res, wb.Hypotheses()); }));
  s.Get(R"(/tree/([^/]+))", Guard([&wb](const auto& req, auto& res) {
          SendJson(res, wb.Tree(req.matches[1]));
        }));
  s.Post("/session", Guard([&wb](const auto& req, auto& res) {
           const auto body = Body(req);
           SendJson(res, {{"session", wb.CreateSession(Field(body, "hypothesis_id"))}}, 201);
         }));
  s.Post("/query", Guard([&wb](const auto& req, auto& res) {
           const auto body = Body(req);
           std::size_t k = 0;
           if (body.contains("k")) {
             if (!body.at("k").is_number_integer() || body.at("k").template get<long long>() < 1) {
               throw BadRequest("k must be a positive integer");
             }
             k = body.at("k").template get<std::size_t>();
           }
           SendJson(res, wb.Query(Field(body, "session"), Field(body, "node_id"), k));
         }));
  s.Post("/annotate", Guard([&wb](const auto& req, auto& res) {
           const auto body = Body(req);
           wb.Annotate(Field(body, "session"), Field(body, "query_id"), Field(body, "fact_id"),
                       Field(body, "verdict"));
           res.status = 204;
         }));
  s.Post("/fact", Guard([&wb](const auto& req, auto& res) {
           const auto body = Body(req);
           SendJson(res, wb.AddFact(Field(body, "session"), Field(body, "text")), 201);
         }));
  s.Post("/attach", Guard([&wb](const auto& req, auto& res) {
           const auto body = Body(req);
           wb.Attach(Field(body, "session"), Field(body, "parent_id"), Field(body, "child_id"));
           res.status = 204;
         }));
  s.Post("/train", Guard([&wb](const auto& req, auto& res) {
           SendJson(res, {{"run_id", wb.StartTraining(Body(req))}}, 202);
         }));
  s.Get(R"(/train/([^/]+))", Guard([&wb](const auto& req, auto& res) {
          SendJson(res, wb.TrainingStatus(req.matches[1]));
        }));
  s.Get("/pools", Guard([&wb](const auto&, auto& res) {
          res.set_content(wb.Pools(), "application/json");
        }));
  s.Get("/metrics", Guard([&wb](const auto&, auto& res) { SendJson(res, wb.Metrics()); }));
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    SendError(res, res.status, res.status == 404 ? "not_found" : "error",
              req.method + " " + req.path);
  });
}

HttpService::~HttpService() = default;

int HttpService::Bind(const std::string& host, int port) {
  auto& s = impl_->server;
  if (port == 0) {
    const int bound = s.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!s.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::Serve() { impl_->server.listen_after_bind(); }

void HttpService::Stop() { impl_->server.stop(); }

}  // namespace aeenc
