#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "evadebench/corpus.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/random.hpp"

namespace evadebench::lm {

inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr std::string_view kBosToken = "<s>";

struct NgramOptions {
  int order = 2;  // 1..3
  // Reserve an <unk> type for tokens unseen in training. Without it,
  // scoring an unseen token is a BackendError.
  bool add_unk = true;
  // Closed vocabulary. Models that must be blended token by token are
  // trained with the same list. Training tokens outside it map to <unk>.
  std::optional<std::vector<std::string>> vocabulary;
  std::string id = "ngram";
};

// Add-one smoothed n-gram model over the reference tokenizer:
//   P(w | h) = (c(h, w) + 1) / (c(h) + V)
// with h the previous order-1 tokens, left-padded with <s>. Immutable after
// training and safe to share across threads.
class NgramModel final : public LanguageModel {
 public:
  static NgramModel train(const Corpus& corpus, const NgramOptions& options);
  static NgramModel train_texts(std::span<const std::string> texts, const NgramOptions& options);

  // Versioned JSON (see docs/ngram_format.md). save() output is a pure
  // function of the model, so retraining on the same data gives the same
  // bytes.
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static NgramModel load(const std::filesystem::path& path);
  static NgramModel deserialize(const std::string& data);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  int order() const { return order_; }
  bool has_unk() const { return has_unk_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  // Conditional probability of `token` after `history` (only the last
  // order-1 tokens matter; shorter histories are padded with <s>).
  double probability(std::span<const std::string> history, std::string_view token) const;
  TokenDistribution distribution_after(std::span<const std::string> history) const;

  // Ancestral sampling of `n` tokens continuing `history`.
  std::vector<std::string> sample(std::span<const std::string> history, std::size_t n, Rng& rng) const;

  // Maps an arbitrary token to the model vocabulary (<unk> when unseen).
  // Throws BackendError if the token is unseen and the model has no <unk>.
  std::string map_token(std::string_view token) const;

  bool operator==(const NgramModel& other) const;

 protected:
  TokenDistribution do_next_token_distribution(std::string_view prefix) const override;
  std::vector<PositionDistribution> do_position_distributions(std::string_view text) const override;

 private:
  using Context = std::vector<std::int32_t>;  // -1 = <s>
  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<std::int32_t, std::uint64_t> next;
  };

  NgramModel() = default;
  void finalize(std::string id);
  Context context_of(std::span<const std::string> history) const;
  std::int32_t index_of(std::string_view token) const;
  TokenDistribution distribution_for(const Context& ctx) const;

  int order_ = 2;
  bool has_unk_ = true;
  std::vector<std::string> vocab_;  // sorted
  std::unordered_map<std::string, std::int32_t> index_;
  std::map<Context, ContextCounts> counts_;
  BackendDescriptor descriptor_;
};

std::uint64_t vocabulary_fingerprint(std::span<const std::string> sorted_vocab);

}  // namespace evadebench::lm
