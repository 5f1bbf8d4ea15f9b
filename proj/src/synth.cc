#include "aeenc/synth.h"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aeenc/random.h"

namespace aeenc {

SynthConfig BiasedPreset() {
  SynthConfig cfg;
  cfg.restatement_fraction = 1.0;
  cfg.abstract_lookalikes = 10;
  cfg.paraphrases = true;
  return cfg;
}

namespace {

// Two-syllable pseudo-words; none collide with the template words.
std::vector<std::string> WordPool(Rng& rng) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                  "p", "r", "s", "t", "v", "z", "br", "tr"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u"};
  std::vector<std::string> syllables;
  for (const char* c : kOnsets) {
    for (const char* v : kVowels) syllables.push_back(std::string(c) + v);
  }
  std::vector<std::string> words;
  for (const auto& a : syllables) {
    for (const auto& b : syllables) words.push_back(a + b + "n");
  }
  rng.Shuffle(words);
  return words;
}

std::string Pad(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", i);
  return buf;
}

}  // namespace

SynthDataset GenerateBiased(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.trees == 0 || cfg.test_trees >= cfg.trees) {
    throw std::invalid_argument("synth needs 0 <= test_trees < trees");
  }
  if (cfg.relations < 2 || cfg.subjects < 2 || cfg.objects < 2 || cfg.categories == 0) {
    throw std::invalid_argument("synth needs at least two relations, subjects and objects");
  }
  if (cfg.distractors_per_tree > cfg.filler_facts) {
    throw std::invalid_argument("synth needs filler_facts >= distractors_per_tree");
  }
  Rng rng(seed);
  const auto pool = WordPool(rng);
  std::size_t next = 0;
  auto take = [&](std::size_t n) {
    std::vector<std::string> out(pool.begin() + static_cast<std::ptrdiff_t>(next),
                                 pool.begin() + static_cast<std::ptrdiff_t>(next + n));
    next += n;
    return out;
  };
  const auto relation_words = take(cfg.relations);
  const auto linked_words = take(cfg.relations);
  const auto subjects = take(cfg.subjects);
  const auto objects = take(cfg.objects);
  const auto categories = take(cfg.categories);
  const auto filler_words = take(40);

  SynthDataset data;
  std::vector<std::string> filler_ids;
  for (std::size_t i = 0; i < cfg.filler_facts; ++i) {
    std::string text = "a";
    for (int w = 0; w < 3; ++w) text += " " + filler_words[rng.Index(filler_words.size())];
    filler_ids.push_back("f" + Pad(i));
    data.corpus.Add(Fact::Make(filler_ids.back(), text));
  }

  for (std::size_t r = 0; r < cfg.relations; ++r) {
    for (std::size_t j = 0; j < cfg.abstract_lookalikes; ++j) {
      data.corpus.Add(Fact::Make(
          "a" + Pad(r) + "-" + Pad(j),
          "every " + categories[rng.Index(categories.size())] + " " + linked_words[r] +
              " " + objects[rng.Index(objects.size())]));
    }
  }

  std::vector<std::size_t> order(cfg.trees);
  for (std::size_t t = 0; t < cfg.trees; ++t) order[t] = t;
  rng.Shuffle(order);
  std::set<std::size_t> test_slots(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(cfg.test_trees));

  for (std::size_t t = 0; t < cfg.trees; ++t) {
    const std::size_t r = t % cfg.relations;
    const auto& s = subjects[rng.Index(subjects.size())];
    const auto& o = objects[rng.Index(objects.size())];
    const auto& c = categories[rng.Index(categories.size())];
    const std::string tid = "t" + Pad(t);
    const std::string h = tid + "-h";
    const std::string sim = tid + "-sim";
    const std::string abs = tid + "-abs";
    data.corpus.Add(Fact::Make(h, s + " " + relation_words[r] + " " + o));
    data.corpus.Add(Fact::Make(sim, s + " is a kind of " + c));
    data.corpus.Add(Fact::Make(abs, "every " + c + " " + linked_words[r] + " " + o));
    std::vector<FactPair> edges = {{h, abs}};
    if (cfg.similar_premise) edges.insert(edges.begin(), {h, sim});
    if (rng.Uniform() < cfg.restatement_fraction) {
      const std::string re = tid + "-re";
      std::string wording[2] = {
          "when " + s + " " + relation_words[r] + " " + o + " it is " + c,
          "if " + s + " " + relation_words[r] + " " + o + " then " + c + " follows"};
      if (cfg.paraphrases && rng.Uniform() < 0.5) std::swap(wording[0], wording[1]);
      data.corpus.Add(Fact::Make(re, wording[0]));
      if (cfg.paraphrases) data.corpus.Add(Fact::Make(tid + "-para", wording[1]));
      edges.push_back({h, re});
    }

    for (std::size_t j = 0; j < cfg.lookalikes_per_tree; ++j) {
      auto other = [&](const std::vector<std::string>& words, const std::string& avoid) {
        std::string w;
        do {
          w = words[rng.Index(words.size())];
        } while (w == avoid);
        return w;
      };
      std::string text;
      switch (j % 3) {
        case 0:
          text = s + " " + relation_words[r] + " " + other(objects, o);
          break;
        case 1:
          text = other(subjects, s) + " " + relation_words[r] + " " + o;
          break;
        default:
          text = s + " " + other(relation_words, relation_words[r]) + " " + o;
          break;
      }
      data.corpus.Add(Fact::Make(tid + "-l" + std::to_string(j + 1), text));
    }

    std::vector<std::string> distractors;
    for (std::size_t pick : rng.Sample(filler_ids.size(), cfg.distractors_per_tree)) {
      distractors.push_back(filler_ids[pick]);
    }
    auto tree = BuildTree(tid, h, edges, std::move(distractors));
    (test_slots.contains(t) ? data.test : data.train).push_back(std::move(tree));
  }
  return data;
}

void WriteSynth(const SynthDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& payload) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << payload;
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  };
  write("corpus.jsonl", SerializeCorpus(data.corpus));
  write("train.jsonl", SerializeTrees(data.corpus, data.train));
  write("test.jsonl", SerializeTrees(data.corpus, data.test));
}

SynthDataset ReadSynth(const std::filesystem::path& dir) {
  SynthDataset data;
  data.corpus = LoadCorpus(dir / "corpus.jsonl");
  auto read = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + (dir / name).string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return IngestTreesFromString(ss.str(), TreeFormat::kCanonical, data.corpus).trees;
  };
  data.train = read("train.jsonl");
  data.test = read("test.jsonl");
  return data;
}

}  // namespace aeenc
