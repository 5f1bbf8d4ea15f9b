#ifndef AEENC_CORPUS_H_
#define AEENC_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace aeenc {

struct Fact {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;

  // Builds a fact with tokens derived from text.
  static Fact Make(std::string id, std::string text);
};

// Ordered fact collection with id lookup. Ids are unique.
class Corpus {
 public:
  Corpus() = default;

  // Throws IntegrityError on a duplicate id.
  void Add(Fact fact);
  const Fact* Find(std::string_view id) const;
  // Throws IntegrityError when the id is unknown.
  const Fact& At(std::string_view id) const;
  bool Contains(std::string_view id) const { return Find(id) != nullptr; }

  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }
  const std::vector<Fact>& facts() const { return facts_; }
  std::size_t IndexOf(std::string_view id) const;

 private:
  std::vector<Fact> facts_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class NodeRole { kHypothesis, kIntermediate, kLeaf };

std::string_view RoleName(NodeRole role);

struct TreeNode {
  std::string fact_id;
  NodeRole role = NodeRole::kLeaf;
  std::vector<TreeNode> children;
};

struct EntailmentTree {
  std::string id;
  TreeNode root;
  std::vector<std::string> distractor_ids;
};

using FactPair = std::pair<std::string, std::string>;

// Builds a tree from a root id and (parent, child) edges. Children keep edge
// order. Throws IntegrityError on cycles, repeated children, nodes with two
// parents, or edges unreachable from the root.
EntailmentTree BuildTree(std::string id, const std::string& root_id,
                         const std::vector<FactPair>& edges,
                         std::vector<std::string> distractors);

// Recomputes roles from structure and checks every TreeNode invariant plus
// distractor disjointness. Throws IntegrityError.
void ValidateTree(const EntailmentTree& tree);
void AssignRoles(TreeNode& root);

// One (parent, child) pair per edge in pre-order.
std::vector<FactPair> ExtractPairs(const EntailmentTree& tree);

// Pre-order list of fact ids in the tree.
std::vector<std::string> TreeFactIds(const EntailmentTree& tree);

// Longest root-to-leaf path measured in edges.
int TreeDepth(const EntailmentTree& tree);

enum class TreeFormat { kCanonical, kEntailmentBank };

struct Dataset {
  Corpus corpus;
  std::vector<EntailmentTree> trees;
};

// Reads a JSON Lines tree file. When corpus_path is given, those facts are
// loaded first and trees may reference them without repeating them.
Dataset IngestTrees(const std::filesystem::path& path, TreeFormat format,
                    const std::optional<std::filesystem::path>& corpus_path =
                        std::nullopt);

// Same as IngestTrees but reads from an in-memory JSON Lines payload.
Dataset IngestTreesFromString(std::string_view payload, TreeFormat format,
                              Corpus base = {});

Corpus LoadCorpus(const std::filesystem::path& path);
Corpus LoadCorpusFromString(std::string_view payload);

// Canonical JSON Lines serialization; fact lists are emitted in tree
// pre-order followed by distractors.
std::string SerializeTrees(const Corpus& corpus,
                           const std::vector<EntailmentTree>& trees);
std::string SerializeCorpus(const Corpus& corpus);

// Token-level Jaccard similarity; 1 when both token sets are empty.
double JaccardOverlap(const Fact& a, const Fact& b);

enum class Provenance { kGold, kRandom, kActive };

std::string_view ProvenanceName(Provenance p);
Provenance ParseProvenance(std::string_view name);

struct Triplet {
  std::string h_id;
  std::string pos_id;
  std::string neg_id;
  Provenance provenance = Provenance::kGold;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletStore {
  std::vector<Triplet> records;
  int round = 0;

  // Throws IntegrityError when pos_id == neg_id.
  void Append(Triplet t);
};

// Checks that every id resolves and no record has pos == neg.
void ValidateTriplets(const TripletStore& store, const Corpus& corpus);

std::string SerializeTriplets(const TripletStore& store);
TripletStore ParseTriplets(std::string_view payload);

// Fallback negatives for trees without distractors.
struct RandomPool {
  bool enabled = false;
  std::size_t size = 0;
  std::uint64_t seed = 0;
};

// Crosses every parent-child pair of a tree with each of its distractors
// (provenance gold). Trees without distractors draw `pool.size` distinct
// non-tree facts from the corpus instead (provenance random).
TripletStore BuildGoldTriplets(const std::vector<EntailmentTree>& trees,
                               const Corpus& corpus,
                               const RandomPool& pool = {});

}  // namespace aeenc

#endif  // AEENC_CORPUS_H_
