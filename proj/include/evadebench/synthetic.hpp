#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/corpus.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/reference.hpp"

// Small self-contained benchmark: a seeded Markov "language" over invented
// words, a reference n-gram model trained on it, machine texts sampled from
// that model and human texts made of the same tokens in shuffled order.
namespace evadebench::synthetic {

struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t concepts = 80;       // each concept has two interchangeable spellings
  std::size_t successors = 4;      // concepts that may follow a concept
  double sentence_end = 1.0 / 26;  // per-word probability of ending a sentence
  std::size_t seed_documents = 4000;
  std::size_t seed_tokens = 90;
  // Seed documents added again with their tokens shuffled, so the reference
  // model also knows word-salad contexts and does not fall back to a flat
  // distribution there.
  std::size_t noise_documents = 4000;
  int order = 3;
  std::size_t n_human = 200;
  std::size_t n_machine = 200;
  std::size_t min_tokens = 80;
  std::size_t max_tokens = 140;
  std::string dataset = "synthetic";
  std::string generator = "ngram-sampler";
};

struct SyntheticBundle {
  Corpus corpus;
  lm::NgramModel model;      // generator and reference scoring backend
  lm::NgramModel companion;  // bigram over the seed language, for two-model detectors
  lm::Lexicon lexicon;   // each word -> its twin spelling, then unrelated words
  std::vector<std::string> words;
};

SyntheticBundle make_synthetic(const SyntheticOptions& options = {});

// Writes corpus.jsonl, model.json, bigram.json, lexicon.json and a
// config.json that runs every metric detector plus dipper and raft on them.
nlohmann::json write_benchmark(const std::filesystem::path& dir, const SyntheticOptions& options = {});

// Seed-language texts (before any n-gram model is involved).
std::vector<std::string> seed_language(const SyntheticOptions& options, std::vector<std::string>* words = nullptr,
                                       lm::Lexicon* lexicon = nullptr);

}  // namespace evadebench::synthetic
