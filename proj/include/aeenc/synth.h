#ifndef AEENC_SYNTH_H_
#define AEENC_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aeenc/corpus.h"

namespace aeenc {

// Knobs of the similarity-bias benchmark. Every hypothesis pairs a subject
// and an object through a relation word. Its gold premises are one
// lexically similar fact (shares the subject) and one abstract fact that
// carries the relation's linked word instead of the relation word itself.
// Non-gold "lookalike" facts repeat the hypothesis wording with one slot
// changed, so a purely lexical encoder ranks them above the abstract
// premise. Some trees also have a restatement premise that repeats the
// hypothesis wording. Tree distractors are unrelated filler facts.
struct SynthConfig {
  std::size_t trees = 60;
  std::size_t test_trees = 20;
  std::size_t relations = 8;
  std::size_t subjects = 30;
  std::size_t objects = 30;
  std::size_t categories = 12;
  std::size_t lookalikes_per_tree = 3;
  double restatement_fraction = 0.5;
  bool similar_premise = true;
  std::size_t distractors_per_tree = 4;
  std::size_t filler_facts = 120;
  // Non-gold facts worded like abstract premises, per relation.
  std::size_t abstract_lookalikes = 0;
  // Each restatement gets an unannotated paraphrase; which wording is gold
  // is a coin flip.
  bool paraphrases = false;
};

SynthConfig BiasedPreset();

struct SynthDataset {
  Corpus corpus;
  std::vector<EntailmentTree> train;
  std::vector<EntailmentTree> test;
};

SynthDataset GenerateBiased(const SynthConfig& cfg, std::uint64_t seed);

// Writes corpus.jsonl, train.jsonl and test.jsonl into dir.
void WriteSynth(const SynthDataset& data, const std::filesystem::path& dir);

// Reads the three files written by WriteSynth.
SynthDataset ReadSynth(const std::filesystem::path& dir);

}  // namespace aeenc

#endif  // AEENC_SYNTH_H_
