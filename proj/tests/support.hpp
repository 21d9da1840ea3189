#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "evadebench/corpus.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/synthetic.hpp"

namespace evadebench::testing {

// Rewriter that counts calls and appends a marker, optionally sleeping.
class CountingRewriter final : public lm::Rewriter {
 public:
  explicit CountingRewriter(std::chrono::milliseconds delay = std::chrono::milliseconds(0)) : delay_(delay) {
    descriptor_.id = "counting";
    descriptor_.kind = lm::BackendKind::remote_endpoint;
    descriptor_.top_k = 1;
  }
  const lm::BackendDescriptor& descriptor() const override { return descriptor_; }
  int calls() const { return calls_.load(); }

 protected:
  std::string do_rewrite(const lm::RewriteRequest& req) const override {
    ++calls_;
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return req.text + " x";
  }

 private:
  std::chrono::milliseconds delay_;
  mutable std::atomic<int> calls_{0};
  lm::BackendDescriptor descriptor_;
};

inline TextSample make_sample(std::string id, std::string text, Label label = Label::machine,
                              std::string dataset = "toy") {
  TextSample s;
  s.id = std::move(id);
  s.text = std::move(text);
  s.label = label;
  if (label == Label::machine) s.generator = "gen";
  s.dataset = std::move(dataset);
  s.domain = "news";
  return s;
}

inline lm::NgramModel toy_model(int order = 2) {
  const std::vector<std::string> texts = {
      "the cat sat on the mat .", "the dog sat on the log .", "a cat and a dog met on the mat .",
      "the cat saw the dog .", "a dog saw a cat on the log ."};
  lm::NgramOptions o;
  o.order = order;
  o.id = "toy";
  return lm::NgramModel::train_texts(texts, o);
}

// The default synthetic benchmark is a few seconds to build; share it.
inline const synthetic::SyntheticBundle& shared_synthetic() {
  static const synthetic::SyntheticBundle bundle = synthetic::make_synthetic();
  return bundle;
}

}  // namespace evadebench::testing
