#include "aeenc/corpus.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "aeenc/errors.h"
#include "aeenc/random.h"
#include "aeenc/tokenize.h"
#include "json.hpp"

namespace aeenc {

using nlohmann::json;

Fact Fact::Make(std::string id, std::string text) {
  Fact f{std::move(id), std::move(text), {}};
  f.tokens = Tokenize(f.text);
  return f;
}

void Corpus::Add(Fact fact) {
  if (by_id_.contains(fact.id)) {
    throw IntegrityError("duplicate fact id \"" + fact.id + "\"");
  }
  by_id_.emplace(fact.id, facts_.size());
  facts_.push_back(std::move(fact));
}

const Fact* Corpus::Find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &facts_[it->second];
}

const Fact& Corpus::At(std::string_view id) const {
  const Fact* f = Find(id);
  if (f == nullptr) {
    throw IntegrityError("unknown fact id \"" + std::string(id) + "\"");
  }
  return *f;
}

std::size_t Corpus::IndexOf(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) {
    throw IntegrityError("unknown fact id \"" + std::string(id) + "\"");
  }
  return it->second;
}

std::string_view RoleName(NodeRole role) {
  switch (role) {
    case NodeRole::kHypothesis:
      return "hypothesis";
    case NodeRole::kIntermediate:
      return "intermediate";
    case NodeRole::kLeaf:
      return "leaf";
  }
  return "leaf";
}

void AssignRoles(TreeNode& root) {
  std::function<void(TreeNode&, bool)> visit = [&](TreeNode& n, bool is_root) {
    if (is_root) {
      n.role = NodeRole::kHypothesis;
    } else {
      n.role = n.children.empty() ? NodeRole::kLeaf : NodeRole::kIntermediate;
    }
    for (auto& c : n.children) visit(c, false);
  };
  visit(root, true);
}

EntailmentTree BuildTree(std::string id, const std::string& root_id,
                         const std::vector<FactPair>& edges,
                         std::vector<std::string> distractors) {
  std::unordered_map<std::string, std::vector<std::string>> children;
  std::unordered_map<std::string, std::string> parent_of;
  std::set<FactPair> seen;
  for (const auto& [p, c] : edges) {
    if (p == c) {
      throw IntegrityError("tree \"" + id + "\": self edge on \"" + p + "\"");
    }
    if (!seen.insert({p, c}).second) {
      throw IntegrityError("tree \"" + id + "\": duplicate edge \"" + p +
                           "\" -> \"" + c + "\"");
    }
    if (auto it = parent_of.find(c); it != parent_of.end()) {
      throw IntegrityError("tree \"" + id + "\": fact \"" + c +
                           "\" has two parents");
    }
    if (c == root_id) {
      throw IntegrityError("tree \"" + id + "\": root \"" + root_id +
                           "\" appears as a child");
    }
    parent_of.emplace(c, p);
    children[p].push_back(c);
  }

  std::size_t reached_edges = 0;
  std::unordered_set<std::string> on_path;
  std::function<TreeNode(const std::string&)> build =
      [&](const std::string& fid) {
        if (!on_path.insert(fid).second) {
          throw IntegrityError("tree \"" + id + "\": cycle through \"" + fid +
                               "\"");
        }
        TreeNode node{fid, NodeRole::kLeaf, {}};
        if (auto it = children.find(fid); it != children.end()) {
          for (const auto& c : it->second) {
            ++reached_edges;
            node.children.push_back(build(c));
          }
        }
        on_path.erase(fid);
        return node;
      };

  EntailmentTree tree{std::move(id), build(root_id), std::move(distractors)};
  if (reached_edges != edges.size()) {
    throw IntegrityError("tree \"" + tree.id +
                         "\": edges unreachable from root \"" + root_id + "\"");
  }
  AssignRoles(tree.root);
  ValidateTree(tree);
  return tree;
}

void ValidateTree(const EntailmentTree& tree) {
  std::unordered_set<std::string> all;
  std::unordered_set<std::string> path;
  std::function<void(const TreeNode&, bool)> visit = [&](const TreeNode& n,
                                                         bool is_root) {
    const bool want_hyp = is_root;
    if ((n.role == NodeRole::kHypothesis) != want_hyp) {
      throw IntegrityError("tree \"" + tree.id + "\": node \"" + n.fact_id +
                           "\" has role " + std::string(RoleName(n.role)));
    }
    if (!is_root && (n.role == NodeRole::kLeaf) != n.children.empty()) {
      throw IntegrityError("tree \"" + tree.id + "\": node \"" + n.fact_id +
                           "\" leaf role does not match its children");
    }
    if (!path.insert(n.fact_id).second) {
      throw IntegrityError("tree \"" + tree.id + "\": fact \"" + n.fact_id +
                           "\" repeats on a root-to-leaf path");
    }
    all.insert(n.fact_id);
    for (const auto& c : n.children) visit(c, false);
    path.erase(n.fact_id);
  };
  visit(tree.root, true);
  for (const auto& d : tree.distractor_ids) {
    if (all.contains(d)) {
      throw IntegrityError("tree \"" + tree.id + "\": distractor \"" + d +
                           "\" is also a tree node");
    }
  }
}

std::vector<FactPair> ExtractPairs(const EntailmentTree& tree) {
  std::vector<FactPair> pairs;
  std::function<void(const TreeNode&)> visit = [&](const TreeNode& n) {
    for (const auto& c : n.children) pairs.emplace_back(n.fact_id, c.fact_id);
    for (const auto& c : n.children) visit(c);
  };
  visit(tree.root);
  return pairs;
}

std::vector<std::string> TreeFactIds(const EntailmentTree& tree) {
  std::vector<std::string> ids;
  std::function<void(const TreeNode&)> visit = [&](const TreeNode& n) {
    ids.push_back(n.fact_id);
    for (const auto& c : n.children) visit(c);
  };
  visit(tree.root);
  return ids;
}

int TreeDepth(const EntailmentTree& tree) {
  std::function<int(const TreeNode&)> depth = [&](const TreeNode& n) {
    int d = 0;
    for (const auto& c : n.children) d = std::max(d, 1 + depth(c));
    return d;
  };
  return depth(tree.root);
}

namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void ForEachJsonLine(std::string_view payload, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < payload.size()) {
    std::size_t end = payload.find('\n', pos);
    if (end == std::string_view::npos) end = payload.size();
    std::string_view line = payload.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
    try {
      fn(line_no, j);
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

void AddOrCheck(Corpus& corpus, const std::string& id,
                const std::string& text) {
  if (const Fact* existing = corpus.Find(id)) {
    if (existing->text != text) {
      throw IntegrityError("fact \"" + id + "\" has conflicting texts");
    }
    return;
  }
  corpus.Add(Fact::Make(id, text));
}

std::string Fnv1aHex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> Split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t at = s.find(sep, pos);
    out.push_back(Trim(s.substr(pos, at == std::string_view::npos
                                         ? std::string_view::npos
                                         : at - pos)));
    if (at == std::string_view::npos) break;
    pos = at + sep.size();
  }
  return out;
}

// Maps one Entailment Bank record onto the canonical tree model. Premises are
// keyed by their WorldTree uuid when present, otherwise by a text hash;
// hypotheses and intermediate conclusions live in a separate "h-" namespace.
void IngestEntailmentBankLine(const json& j, Dataset& ds,
                              std::unordered_set<std::string>& tree_ids) {
  const std::string tree_id = j.at("id").get<std::string>();
  const json& meta = j.contains("meta") ? j.at("meta") : json::object();

  std::unordered_map<std::string, std::string> label_to_fact;
  auto premise_id = [&](const std::string& label, const std::string& text) {
    if (meta.contains("worldtree_provenance")) {
      const json& prov = meta.at("worldtree_provenance");
      if (prov.contains(label) && prov.at(label).contains("uuid")) {
        return "p-" + prov.at(label).at("uuid").get<std::string>();
      }
    }
    return "p-" + Fnv1aHex(text);
  };

  std::unordered_map<std::string, std::string> sentences;
  if (meta.contains("triples")) {
    for (const auto& [label, text] : meta.at("triples").items()) {
      sentences[label] = text.get<std::string>();
    }
  } else if (j.contains("context")) {
    // "sent1: text sent2: text ..."
    const std::string ctx = j.at("context").get<std::string>();
    static const std::regex kLabel(R"((sent\d+):\s*)");
    std::vector<std::smatch> marks(
        std::sregex_iterator(ctx.begin(), ctx.end(), kLabel),
        std::sregex_iterator());
    for (std::size_t i = 0; i < marks.size(); ++i) {
      const std::size_t begin =
          static_cast<std::size_t>(marks[i].position(0) + marks[i].length(0));
      const std::size_t end = i + 1 < marks.size()
                                  ? static_cast<std::size_t>(marks[i + 1].position(0))
                                  : ctx.size();
      sentences[marks[i][1].str()] = Trim(std::string_view(ctx).substr(begin, end - begin));
    }
  }
  for (const auto& [label, text] : sentences) {
    const std::string fid = premise_id(label, text);
    AddOrCheck(ds.corpus, fid, text);
    label_to_fact[label] = fid;
  }

  std::unordered_map<std::string, std::string> intermediates;
  if (meta.contains("intermediate_conclusions")) {
    for (const auto& [label, text] : meta.at("intermediate_conclusions").items()) {
      intermediates[label] = text.get<std::string>();
    }
  }
  const std::string hyp_text = j.at("hypothesis").get<std::string>();
  const std::string hyp_id = "h-" + Fnv1aHex(hyp_text);
  AddOrCheck(ds.corpus, hyp_id, hyp_text);
  label_to_fact["hypothesis"] = hyp_id;

  std::string proof;
  if (j.contains("proof")) {
    proof = j.at("proof").get<std::string>();
  } else if (meta.contains("step_proof")) {
    proof = meta.at("step_proof").get<std::string>();
  }

  std::vector<FactPair> edges;
  for (const std::string& step : Split(proof, ";")) {
    if (step.empty()) continue;
    const auto arrow = step.find("->");
    if (arrow == std::string::npos) {
      throw IntegrityError("tree \"" + tree_id + "\": malformed proof step \"" +
                           step + "\"");
    }
    std::string target = Trim(std::string_view(step).substr(arrow + 2));
    std::string target_text;
    if (const auto colon = target.find(':'); colon != std::string::npos) {
      target_text = Trim(std::string_view(target).substr(colon + 1));
      target = Trim(std::string_view(target).substr(0, colon));
    }
    if (!label_to_fact.contains(target)) {
      if (target_text.empty()) {
        auto it = intermediates.find(target);
        if (it == intermediates.end()) {
          throw IntegrityError("tree \"" + tree_id +
                               "\": unknown proof node \"" + target + "\"");
        }
        target_text = it->second;
      }
      const std::string fid = "h-" + Fnv1aHex(target_text);
      AddOrCheck(ds.corpus, fid, target_text);
      label_to_fact[target] = fid;
    }
    for (const std::string& src :
         Split(std::string_view(step).substr(0, arrow), "&")) {
      auto it = label_to_fact.find(src);
      if (it == label_to_fact.end()) {
        throw IntegrityError("tree \"" + tree_id + "\": unknown proof node \"" +
                             src + "\"");
      }
      edges.emplace_back(label_to_fact.at(target), it->second);
    }
  }

  std::vector<std::string> distractors;
  if (meta.contains("distractors")) {
    for (const auto& d : meta.at("distractors")) {
      const std::string label = d.get<std::string>();
      auto it = label_to_fact.find(label);
      if (it == label_to_fact.end()) {
        throw IntegrityError("tree \"" + tree_id + "\": unknown distractor \"" +
                             label + "\"");
      }
      distractors.push_back(it->second);
    }
  }
  if (!tree_ids.insert(tree_id).second) {
    throw IntegrityError("duplicate tree id \"" + tree_id + "\"");
  }
  // EB occasionally lists a proof premise among distractors; drop those.
  EntailmentTree tree = BuildTree(tree_id, hyp_id, edges, {});
  const auto ids = TreeFactIds(tree);
  const std::unordered_set<std::string> in_tree(ids.begin(), ids.end());
  for (auto& d : distractors) {
    if (!in_tree.contains(d)) tree.distractor_ids.push_back(std::move(d));
  }
  ds.trees.push_back(std::move(tree));
}

void IngestCanonicalLine(const json& j, Dataset& ds,
                         std::unordered_set<std::string>& tree_ids) {
  const std::string tree_id = j.at("id").get<std::string>();
  if (j.contains("facts")) {
    for (const auto& f : j.at("facts")) {
      AddOrCheck(ds.corpus, f.at("id").get<std::string>(),
                 f.at("text").get<std::string>());
    }
  }
  const std::string root = j.at("root").get<std::string>();
  std::vector<FactPair> edges;
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        throw json::type_error::create(302, "edge must be [parent, child]",
                                       &e);
      }
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  }
  std::vector<std::string> distractors;
  if (j.contains("distractors")) {
    distractors = j.at("distractors").get<std::vector<std::string>>();
  }
  auto require = [&](const std::string& fid) {
    if (!ds.corpus.Contains(fid)) {
      throw IntegrityError("tree \"" + tree_id + "\" references missing fact \"" +
                           fid + "\"");
    }
  };
  require(root);
  for (const auto& [p, c] : edges) {
    require(p);
    require(c);
  }
  for (const auto& d : distractors) require(d);
  if (!tree_ids.insert(tree_id).second) {
    throw IntegrityError("duplicate tree id \"" + tree_id + "\"");
  }
  ds.trees.push_back(BuildTree(tree_id, root, edges, std::move(distractors)));
}

}  // namespace

Dataset IngestTreesFromString(std::string_view payload, TreeFormat format,
                              Corpus base) {
  Dataset ds{std::move(base), {}};
  std::unordered_set<std::string> tree_ids;
  ForEachJsonLine(payload, [&](std::size_t, const json& j) {
    if (format == TreeFormat::kCanonical) {
      IngestCanonicalLine(j, ds, tree_ids);
    } else {
      IngestEntailmentBankLine(j, ds, tree_ids);
    }
  });
  return ds;
}

Dataset IngestTrees(const std::filesystem::path& path, TreeFormat format,
                    const std::optional<std::filesystem::path>& corpus_path) {
  Corpus base;
  if (corpus_path) base = LoadCorpus(*corpus_path);
  return IngestTreesFromString(ReadFile(path), format, std::move(base));
}

Corpus LoadCorpusFromString(std::string_view payload) {
  Corpus corpus;
  ForEachJsonLine(payload, [&](std::size_t line, const json& j) {
    try {
      corpus.Add(Fact::Make(j.at("id").get<std::string>(),
                            j.at("text").get<std::string>()));
    } catch (const IntegrityError& e) {
      throw ParseError(line, e.what());
    }
  });
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  return LoadCorpusFromString(ReadFile(path));
}

std::string SerializeTrees(const Corpus& corpus,
                           const std::vector<EntailmentTree>& trees) {
  std::string out;
  for (const auto& tree : trees) {
    json facts = json::array();
    for (const auto& fid : TreeFactIds(tree)) {
      facts.push_back({{"id", fid}, {"text", corpus.At(fid).text}});
    }
    for (const auto& fid : tree.distractor_ids) {
      facts.push_back({{"id", fid}, {"text", corpus.At(fid).text}});
    }
    json edges = json::array();
    for (const auto& [p, c] : ExtractPairs(tree)) edges.push_back({p, c});
    json line = {{"id", tree.id},
                 {"facts", facts},
                 {"edges", edges},
                 {"root", tree.root.fact_id},
                 {"distractors", tree.distractor_ids}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::string out;
  for (const auto& f : corpus.facts()) {
    out += json{{"id", f.id}, {"text", f.text}}.dump();
    out += '\n';
  }
  return out;
}

double JaccardOverlap(const Fact& a, const Fact& b) {
  std::set<std::string_view> sa(a.tokens.begin(), a.tokens.end());
  std::set<std::string_view> sb(b.tokens.begin(), b.tokens.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string_view ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kGold:
      return "gold";
    case Provenance::kRandom:
      return "random";
    case Provenance::kActive:
      return "active";
  }
  return "gold";
}

Provenance ParseProvenance(std::string_view name) {
  if (name == "gold") return Provenance::kGold;
  if (name == "random") return Provenance::kRandom;
  if (name == "active") return Provenance::kActive;
  throw std::invalid_argument("unknown provenance \"" + std::string(name) +
                              "\"");
}

void TripletStore::Append(Triplet t) {
  if (t.pos_id == t.neg_id) {
    throw IntegrityError("triplet with identical positive and negative \"" +
                         t.pos_id + "\"");
  }
  records.push_back(std::move(t));
}

void ValidateTriplets(const TripletStore& store, const Corpus& corpus) {
  for (const auto& r : store.records) {
    for (const auto* id : {&r.h_id, &r.pos_id, &r.neg_id}) {
      if (!corpus.Contains(*id)) {
        throw IntegrityError("triplet references missing fact \"" + *id + "\"");
      }
    }
    if (r.pos_id == r.neg_id) {
      throw IntegrityError("triplet with identical positive and negative \"" +
                           r.pos_id + "\"");
    }
  }
}

std::string SerializeTriplets(const TripletStore& store) {
  std::string out;
  for (const auto& r : store.records) {
    out += json{{"h", r.h_id},
                {"pos", r.pos_id},
                {"neg", r.neg_id},
                {"provenance", ProvenanceName(r.provenance)},
                {"round", store.round}}
               .dump();
    out += '\n';
  }
  return out;
}

TripletStore ParseTriplets(std::string_view payload) {
  TripletStore store;
  ForEachJsonLine(payload, [&](std::size_t line, const json& j) {
    Triplet t{j.at("h").get<std::string>(), j.at("pos").get<std::string>(),
              j.at("neg").get<std::string>(),
              ParseProvenance(j.value("provenance", "gold"))};
    if (j.contains("round")) store.round = j.at("round").get<int>();
    try {
      store.Append(std::move(t));
    } catch (const IntegrityError& e) {
      throw ParseError(line, e.what());
    }
  });
  return store;
}

TripletStore BuildGoldTriplets(const std::vector<EntailmentTree>& trees,
                               const Corpus& corpus, const RandomPool& pool) {
  TripletStore store;
  Rng rng(pool.seed);
  for (const auto& tree : trees) {
    const auto pairs = ExtractPairs(tree);
    if (pairs.empty()) continue;
    if (!tree.distractor_ids.empty()) {
      for (const auto& [h, p] : pairs) {
        for (const auto& d : tree.distractor_ids) {
          store.Append({h, p, d, Provenance::kGold});
        }
      }
      continue;
    }
    if (!pool.enabled || pool.size == 0) continue;
    const auto ids = TreeFactIds(tree);
    const std::unordered_set<std::string> in_tree(ids.begin(), ids.end());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!in_tree.contains(corpus.facts()[i].id)) candidates.push_back(i);
    }
    std::vector<std::string> negs;
    for (std::size_t pick : rng.Sample(candidates.size(), pool.size)) {
      negs.push_back(corpus.facts()[candidates[pick]].id);
    }
    for (const auto& [h, p] : pairs) {
      for (const auto& neg : negs) store.Append({h, p, neg, Provenance::kRandom});
    }
  }
  return store;
}

}  // namespace aeenc
