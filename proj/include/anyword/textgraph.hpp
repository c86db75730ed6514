// Copyright 2026 The Anyword Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Referring-expression parsing: tokens, noun-phrase entities with their
// adjectival modifiers, predicates, and the mutual-exclusion structure used by
// the prompt regularisers. Also generates synonym-mutated expressions.

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anyword/rng.hpp"

namespace anyword::textgraph {

enum class PosTag { kNoun, kAdj, kVerb, kOther };

std::string_view pos_tag_name(PosTag tag);

struct Token {
  std::string surface;
  std::size_t index = 0;
  PosTag pos = PosTag::kOther;

  bool operator==(const Token&) const = default;
};

// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool overlaps(const TokenSpan& o) const { return begin < o.end && o.begin < end; }
  bool operator==(const TokenSpan&) const = default;
};

struct Entity {
  Token root;
  std::vector<Token> adjectives;
  // Token index of the noun each adjective modifies; parallel to `adjectives`.
  std::vector<std::size_t> adjective_heads;
  std::vector<Token> attribute_nouns;
  TokenSpan span;
  // Determiner-free surface of the entity's own noun phrase, e.g. "brown bull".
  std::string label;

  // Root, attribute nouns and adjectives in token order.
  std::vector<std::size_t> concept_tokens() const;

  bool operator==(const Entity&) const = default;
};

struct ParsedExpression {
  std::string text;
  std::vector<Token> tokens;
  std::vector<Entity> entities;
  std::vector<Token> predicates;
  // exclusion_sets[i] = every entity id other than i.
  std::vector<std::vector<std::size_t>> exclusion_sets;

  std::vector<std::size_t> concept_tokens() const;
  bool operator==(const ParsedExpression&) const = default;
};

// Whitespace-normalised, punctuation-stripped words.
std::vector<std::string> tokenize(std::string_view text);
std::string normalize_whitespace(std::string_view text);

enum class ParserKind { kBuiltinRules, kExternalTagger, kLlmPrompted };

class ParserBackend {
 public:
  virtual ~ParserBackend() = default;
  virtual ParserKind kind() const = 0;
  // `text` is already whitespace-normalised and non-empty.
  virtual ParsedExpression parse(std::string_view text) const = 0;
  // Up to `n` whole-expression variants in which the subject noun phrase is
  // replaced by a synonym. May return fewer when candidates run out.
  virtual std::vector<std::string> variant_candidates(std::string_view text,
                                                      const ParsedExpression& parsed,
                                                      std::size_t n) const = 0;
};

// Lexicon lookup used by the rule backend.
struct LexEntry {
  PosTag pos = PosTag::kOther;
  // Nouns describing a part, garment, material or pattern of another object.
  bool attribute_noun = false;
};

std::optional<LexEntry> lexicon_lookup(std::string_view lowercase_word);
std::size_t lexicon_size();
// Every base form in the lexicon, sorted.
std::vector<std::string> lexicon_words();
// Lexicon first, suffix heuristics for unknown words.
PosTag guess_pos(std::string_view word, const std::string* previous = nullptr);

using SynonymTable = std::vector<std::pair<std::string, std::vector<std::string>>>;
// Built-in phrase/noun synonym table used for the stability study.
const SynonymTable& builtin_synonyms();

class RuleParser : public ParserBackend {
 public:
  RuleParser();
  explicit RuleParser(SynonymTable synonyms);

  ParserKind kind() const override { return ParserKind::kBuiltinRules; }
  ParsedExpression parse(std::string_view text) const override;
  std::vector<std::string> variant_candidates(std::string_view text, const ParsedExpression& parsed,
                                              std::size_t n) const override;

 private:
  SynonymTable synonyms_;
};

// External POS tagger: the callable returns one tag per word; chunking and
// attachment reuse the rule grammar.
class TaggerParser : public ParserBackend {
 public:
  using Tagger = std::function<std::vector<PosTag>(const std::vector<std::string>&)>;

  TaggerParser(Tagger tagger, SynonymTable synonyms = builtin_synonyms());
  ParserKind kind() const override { return ParserKind::kExternalTagger; }
  ParsedExpression parse(std::string_view text) const override;
  std::vector<std::string> variant_candidates(std::string_view text, const ParsedExpression& parsed,
                                              std::size_t n) const override;

 private:
  Tagger tagger_;
  RuleParser fallback_;
};

// Completion transport for prompted language models.
class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  // Throws Error(kBackendUnavailable) on transport failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

// OpenAI-compatible chat-completions endpoint over plain HTTP.
std::shared_ptr<LlmTransport> make_http_llm_transport(const std::string& url, std::string model);

extern const std::string_view kParsePromptTemplate;
extern const std::string_view kSynonymPromptTemplate;

std::string render_parse_prompt(std::string_view caption);
std::string render_synonym_prompt(std::string_view sentence, std::size_t n);

struct LlmParseReply {
  std::vector<std::string> attributes;
  std::string object;
};

// Strict grammar: "[(a1, a2, ...), object]". Throws kBackendUnavailable with
// the raw reply as detail when it does not match.
LlmParseReply parse_llm_reply(std::string_view reply);

class LlmParser : public ParserBackend {
 public:
  explicit LlmParser(std::shared_ptr<LlmTransport> transport);
  ParserKind kind() const override { return ParserKind::kLlmPrompted; }
  ParsedExpression parse(std::string_view text) const override;
  std::vector<std::string> variant_candidates(std::string_view text, const ParsedExpression& parsed,
                                              std::size_t n) const override;

 private:
  std::string ask(const std::string& prompt) const;

  std::shared_ptr<LlmTransport> transport_;
  mutable std::mutex mutex_;
};

// Validates input, dispatches to the backend and checks the result.
// Errors: kEmptyExpression, kNoEntityFound, kBackendUnavailable.
ParsedExpression parse_expression(std::string_view text, const ParserBackend& backend);

// `n` distinct variants of `text`, none equal to it. Raises
// kInsufficientSynonyms rather than returning fewer than `n`.
std::vector<std::string> mutate_expression(std::string_view text, std::size_t n,
                                           const ParserBackend& backend, Rng& rng);

// Variant count for the stability study, uniform in {2, ..., 5}.
std::size_t study_variant_count(Rng& rng);

}  // namespace anyword::textgraph
