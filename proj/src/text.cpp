#include "evadebench/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace evadebench::text {
namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::array<std::string_view, 19> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "e.g", "i.e", "inc", "ltd", "co", "no", "fig", "al", "approx"};

bool is_closer(unsigned char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool ends_with_abbreviation(std::string_view text, std::size_t dot) {
  // Word immediately before the dot, letters and inner dots only.
  std::size_t b = dot;
  while (b > 0) {
    const unsigned char c = static_cast<unsigned char>(text[b - 1]);
    if (std::isalpha(c) || c == '.') {
      --b;
    } else {
      break;
    }
  }
  if (b == dot) return false;
  const std::string word = lower(text.substr(b, dot - b));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t j = i + 1;
      while (j < s.size()) {
        const unsigned char d = static_cast<unsigned char>(s[j]);
        if (is_word_char(d)) {
          ++j;
        } else if (d == '\'' && j + 1 < s.size() && is_word_char(static_cast<unsigned char>(s[j + 1]))) {
          j += 2;
        } else {
          break;
        }
      }
      out.push_back({lower(s.substr(i, j - i)), i, j, true});
      i = j;
    } else {
      out.push_back({std::string(1, static_cast<char>(c)), i, i + 1, false});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> token_strings(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize(s)) out.push_back(std::move(t.text));
  return out;
}

std::size_t token_count(std::string_view s) { return tokenize(s).size(); }

bool is_punctuation_token(std::string_view token) {
  return token.size() == 1 && !is_word_char(static_cast<unsigned char>(token[0])) &&
         !is_space(static_cast<unsigned char>(token[0]));
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty() && !is_punctuation_token(t)) out += ' ';
    out += t;
  }
  return out;
}

std::string truncate_tokens(std::string_view s, std::size_t n) {
  if (n == 0) return {};
  const auto toks = tokenize(s);
  if (n >= toks.size()) return std::string(s);
  return std::string(s.substr(0, toks[n - 1].end));
}

std::string match_case(std::string_view like, std::string_view word) {
  std::string out(word);
  if (!like.empty() && !out.empty() && std::isupper(static_cast<unsigned char>(like[0]))) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

std::string replace_token(std::string_view s, const Token& token, std::string_view replacement) {
  std::string out(s.substr(0, token.begin));
  out += match_case(s.substr(token.begin, token.end - token.begin), replacement);
  out += s.substr(token.end);
  return out;
}

std::string delete_token(std::string_view s, const Token& token) {
  std::size_t b = token.begin;
  std::size_t e = token.end;
  // Swallow the following whitespace run, or the preceding one at the end.
  if (e < s.size() && is_space(static_cast<unsigned char>(s[e]))) {
    while (e < s.size() && is_space(static_cast<unsigned char>(s[e]))) ++e;
  } else {
    while (b > 0 && is_space(static_cast<unsigned char>(s[b - 1]))) --b;
  }
  std::string out(s.substr(0, b));
  out += s.substr(e);
  return out;
}

std::string SentenceSplit::join() const {
  std::string out = leading;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out += sentences[i];
    out += separators[i];
  }
  return out;
}

SentenceSplit split_sentences(std::string_view s) {
  SentenceSplit out;
  std::size_t i = 0;
  while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
  out.leading = std::string(s.substr(0, i));

  std::size_t start = i;
  while (i < s.size()) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (s[j] == '.' || s[j] == '!' || s[j] == '?')) ++j;
    while (j < s.size() && is_closer(static_cast<unsigned char>(s[j]))) ++j;
    const bool at_gap = j == s.size() || is_space(static_cast<unsigned char>(s[j]));
    const bool abbreviation = c == '.' && j == i + 1 && ends_with_abbreviation(s, i);
    if (!at_gap || abbreviation) {
      i = j;
      continue;
    }
    std::size_t k = j;
    while (k < s.size() && is_space(static_cast<unsigned char>(s[k]))) ++k;
    out.sentences.emplace_back(s.substr(start, j - start));
    out.separators.emplace_back(s.substr(j, k - j));
    start = k;
    i = k;
  }
  if (start < s.size()) {
    // Trailing text without terminal punctuation; keep its trailing spaces
    // as the separator so join() stays exact.
    std::size_t e = s.size();
    while (e > start && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    out.sentences.emplace_back(s.substr(start, e - start));
    out.separators.emplace_back(s.substr(e));
  }
  return out;
}

}  // namespace evadebench::text
