#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evadebench::text {

// One token of the reference tokenizer: lower-cased surface form plus the
// byte range it came from, so substitutions can be spliced back into the
// original string without disturbing whitespace.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool is_word = false;
};

// Whitespace + punctuation splitting, ASCII lower-casing. Runs of
// alphanumerics (and any non-ASCII byte) form words; an apostrophe between
// word characters stays inside the word; every other non-space character is
// a single-character punctuation token.
std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> token_strings(std::string_view text);
std::size_t token_count(std::string_view text);

// Inverse of tokenize for generated token streams: words are separated by a
// single space, punctuation attaches to the preceding token.
std::string detokenize(std::span<const std::string> tokens);

// Text made of the first `n` tokens of `text`, cut at the end of the n-th
// token's source span (original spacing kept).
std::string truncate_tokens(std::string_view text, std::size_t n);

bool is_punctuation_token(std::string_view token);

// Replaces the source span of `token` with `replacement`, copying the
// leading capital of the original word.
std::string replace_token(std::string_view text, const Token& token, std::string_view replacement);

// Removes the token and one adjacent whitespace run.
std::string delete_token(std::string_view text, const Token& token);

// Applies the capitalisation of the first character of `like` to `word`.
std::string match_case(std::string_view like, std::string_view word);

// Sentence segmentation shared by readability scoring and attack blending.
// join() reproduces the input byte-exactly.
struct SentenceSplit {
  std::string leading;                  // whitespace before the first sentence
  std::vector<std::string> sentences;   // never contain boundary whitespace
  std::vector<std::string> separators;  // whitespace after each sentence ("" at EOF)

  std::string join() const;
  std::size_t size() const { return sentences.size(); }
};

// Boundaries are runs of {. ! ?} (optionally followed by closing quotes or
// brackets) that are followed by whitespace or end of text, except after a
// short list of abbreviations. Text without any boundary is one sentence.
// Whitespace-only text yields zero sentences.
SentenceSplit split_sentences(std::string_view text);

}  // namespace evadebench::text
