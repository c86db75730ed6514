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

#include "anyword/textgraph.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

#include "anyword/errors.hpp"
#include "lexicon_data.hpp"

namespace anyword::textgraph {

std::string_view pos_tag_name(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kAdj: return "ADJ";
    case PosTag::kVerb: return "VERB";
    case PosTag::kOther: return "OTHER";
  }
  return "OTHER";
}

namespace {

enum WordFlag : unsigned {
  kDet = 1u << 0,
  kFunction = 1u << 1,
  kNoun = 1u << 2,
  kAttr = 1u << 3,
  kAdjective = 1u << 4,
  kVerbWord = 1u << 5,
  kFrame = 1u << 6,
};

using Lexicon = std::unordered_map<std::string, unsigned>;

void add_words(Lexicon& lex, std::string_view list, unsigned flags) {
  std::size_t pos = 0;
  while (pos < list.size()) {
    while (pos < list.size() && list[pos] == ' ') ++pos;
    std::size_t end = list.find(' ', pos);
    if (end == std::string_view::npos) end = list.size();
    if (end > pos) lex[std::string(list.substr(pos, end - pos))] |= flags;
    pos = end;
  }
}

const Lexicon& lexicon() {
  static const Lexicon lex = [] {
    Lexicon l;
    add_words(l, lexdata::kDeterminers, kDet | kFunction);
    add_words(l, lexdata::kFunctionWords, kFunction);
    add_words(l, lexdata::kNouns, kNoun);
    add_words(l, lexdata::kAttributeNouns, kNoun | kAttr);
    add_words(l, lexdata::kAdjectives, kAdjective);
    add_words(l, lexdata::kVerbs, kVerbWord);
    add_words(l, lexdata::kIrregularVerbs, kVerbWord);
    add_words(l, lexdata::kIngNouns, kNoun);
    add_words(l, lexdata::kFrameNouns, kNoun | kFrame);
    return l;
  }();
  return lex;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}


unsigned exact(std::string_view w) {
  const auto& lex = lexicon();
  auto it = lex.find(std::string(w));
  return it == lex.end() ? 0u : it->second;
}

// Flags for a word including inflected forms. Inflections only ever yield
// noun (plural) or verb readings of their base.
unsigned word_flags(std::string_view w) {
  if (unsigned f = exact(w)) return f;
  const std::size_t n = w.size();
  auto ends = [&](std::string_view suf) { return n > suf.size() + 1 && w.ends_with(suf); };
  auto stem = [&](std::size_t cut, std::string_view add = {}) {
    return std::string(w.substr(0, n - cut)) + std::string(add);
  };
  unsigned f = 0;
  auto take = [&](const std::string& base, unsigned mask) {
    const unsigned b = exact(base);
    if (!(b & mask)) return;
    f |= b & mask;
    if ((mask & kNoun) && (b & kNoun)) f |= b & kAttr;
  };
  if (ends("ies")) { take(stem(3, "y"), kNoun | kVerbWord); }
  if (ends("ves")) { take(stem(3, "f"), kNoun); take(stem(3, "fe"), kNoun); }
  if (ends("es")) { take(stem(2), kNoun | kVerbWord); }
  if (ends("s") && !ends("ss")) { take(stem(1), kNoun | kVerbWord); }
  if (ends("men")) { take(stem(3, "man"), kNoun); }
  if (ends("ing")) {
    take(stem(3), kVerbWord);
    take(stem(3, "e"), kVerbWord);
    if (n > 5 && w[n - 4] == w[n - 5]) take(stem(4), kVerbWord);
    if (ends("ying")) take(stem(4, "ie"), kVerbWord);
  }
  if (ends("ed")) {
    take(stem(2), kVerbWord);
    take(stem(1), kVerbWord);
    if (n > 4 && w[n - 3] == w[n - 4]) take(stem(3), kVerbWord);
    if (ends("ied")) take(stem(3, "y"), kVerbWord);
  }
  return f;
}

PosTag suffix_guess(std::string_view w) {
  const std::size_t n = w.size();
  auto ends = [&](std::string_view s) { return n > s.size() + 1 && w.ends_with(s); };
  if (ends("ing")) return PosTag::kVerb;
  if (ends("ly")) return PosTag::kOther;
  for (std::string_view s : {"ous", "ful", "ive", "able", "ible", "less", "ish", "est", "ic", "al", "ed"}) {
    if (ends(s)) return PosTag::kAdj;
  }
  return PosTag::kNoun;
}

struct TagInfo {
  PosTag pos = PosTag::kOther;
  bool determiner = false;
  bool attribute = false;
  bool frame = false;
  bool boundary = false;
};

bool is_boundary_word(std::string_view w) { return w == "," || w == ";"; }

std::string strip_possessive(std::string_view w, bool& possessive) {
  possessive = false;
  for (std::string_view suf : {"'s", "’s", "s'"}) {
    if (w.size() > suf.size() && w.ends_with(suf)) {
      possessive = true;
      if (suf == "s'") return std::string(w.substr(0, w.size() - 1));
      return std::string(w.substr(0, w.size() - suf.size()));
    }
  }
  return std::string(w);
}

// Context-sensitive tagging of lower-cased words.
std::vector<TagInfo> tag_words(const std::vector<std::string>& words) {
  const std::size_t n = words.size();
  std::vector<unsigned> flags(n);
  std::vector<bool> possessive(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    bool poss = false;
    const std::string base = strip_possessive(words[i], poss);
    possessive[i] = poss;
    flags[i] = is_boundary_word(words[i]) ? 0u : word_flags(base);
  }
  auto can_noun_at = [&](std::size_t i) {
    if (i >= n || is_boundary_word(words[i])) return false;
    if (flags[i] & kFunction) return false;
    return (flags[i] & (kNoun | kAdjective)) != 0 || flags[i] == 0;
  };

  std::vector<TagInfo> tags(n);
  for (std::size_t i = 0; i < n; ++i) {
    TagInfo& t = tags[i];
    const unsigned f = flags[i];
    t.attribute = (f & kAttr) != 0;
    t.frame = (f & kFrame) != 0;
    if (is_boundary_word(words[i])) {
      t.boundary = true;
      continue;
    }
    if (possessive[i]) {
      // Possessive sources act as modifiers of the following noun.
      t.pos = PosTag::kAdj;
      continue;
    }
    if (f & kFunction) {
      t.determiner = (f & kDet) != 0;
      continue;
    }
    const bool noun = f & kNoun;
    const bool adj = f & kAdjective;
    const bool verb = f & kVerbWord;
    const PosTag prev = i > 0 ? tags[i - 1].pos : PosTag::kOther;
    const bool prev_modifier =
        i == 0 || tags[i - 1].determiner || prev == PosTag::kAdj || tags[i - 1].boundary;
    if (f == 0) {
      t.pos = suffix_guess(words[i]);
      continue;
    }
    if (adj && noun) {
      t.pos = can_noun_at(i + 1) ? PosTag::kAdj : PosTag::kNoun;
    } else if (adj && verb) {
      t.pos = can_noun_at(i + 1) && prev_modifier ? PosTag::kAdj : PosTag::kVerb;
    } else if (noun && verb) {
      t.pos = (prev_modifier || prev == PosTag::kVerb) ? PosTag::kNoun
              : prev == PosTag::kNoun                  ? PosTag::kVerb
                                                       : PosTag::kNoun;
    } else if (noun) {
      t.pos = PosTag::kNoun;
    } else if (adj) {
      t.pos = PosTag::kAdj;
    } else if (verb) {
      // Participles in modifier position ("parked car") read as adjectives.
      const bool participle = words[i].ends_with("ed") || words[i].ends_with("en");
      t.pos = participle && prev_modifier && can_noun_at(i + 1) ? PosTag::kAdj : PosTag::kVerb;
    }
  }
  return tags;
}

bool is_attach_trigger(std::string_view w) {
  return w == "in" || w == "with" || w == "wearing" || w == "wears" || w == "wear" ||
         w == "having" || w == "has" || w == "have" || w == "dressed";
}

bool is_relative_filler(std::string_view w) {
  return w == "who" || w == "that" || w == "which" || w == "is" || w == "are";
}

std::string join_tokens(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty() && !is_boundary_word(w)) out += ' ';
    out += w;
  }
  return out;
}

// Grammar shared by the rule and external-tagger backends.
ParsedExpression build_parse(std::string_view text, const std::vector<std::string>& words,
                             std::vector<TagInfo> tags) {
  ParsedExpression out;
  out.text = std::string(text);
  const std::size_t n = words.size();
  std::vector<std::string> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = lower(words[i]);
    out.tokens.push_back(Token{words[i], i, tags[i].pos});
    if (tags[i].pos == PosTag::kVerb) out.predicates.push_back(out.tokens.back());
  }

  std::vector<std::size_t> pending_adjectives;
  bool last_chunk_attached = false;

  auto add_adjective = [](Entity& e, std::size_t idx, std::size_t head, const Token& tok) {
    e.adjectives.push_back(tok);
    e.adjective_heads.push_back(head);
    (void)idx;
  };
  auto attach_stranded = [&](const std::vector<std::size_t>& adjs) {
    if (adjs.empty()) return;
    if (out.entities.empty()) {
      pending_adjectives.insert(pending_adjectives.end(), adjs.begin(), adjs.end());
      return;
    }
    Entity& e = out.entities.back();
    for (std::size_t a : adjs) add_adjective(e, a, e.root.index, out.tokens[a]);
  };
  // True when token `pos` directly follows the last entity's span, allowing
  // relative-clause fillers ("a man who is wearing ...").
  auto follows_last_entity = [&](std::size_t pos) {
    if (out.entities.empty()) return false;
    std::size_t end = out.entities.back().span.end;
    while (end < pos && is_relative_filler(lw[end])) ++end;
    return end == pos;
  };

  std::size_t i = 0;
  while (i < n) {
    const TagInfo& t = tags[i];
    if (!(t.determiner || t.pos == PosTag::kAdj || t.pos == PosTag::kNoun)) {
      if (t.pos == PosTag::kVerb && !is_attach_trigger(lw[i])) last_chunk_attached = false;
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::size_t j = i;
    while (j < n && tags[j].determiner) ++j;
    std::size_t k = j;
    while (k < n && (tags[k].pos == PosTag::kAdj || tags[k].pos == PosTag::kNoun)) ++k;
    std::size_t head = n;
    for (std::size_t m = j; m < k; ++m) {
      if (tags[m].pos == PosTag::kNoun) head = m;
    }
    if (head == n) {
      std::vector<std::size_t> adjs;
      for (std::size_t m = j; m < k; ++m) adjs.push_back(m);
      attach_stranded(adjs);
      i = std::max(k, start + 1);
      continue;
    }

    // A frame noun followed by "of" ("a photo of ...") is not an entity.
    if (tags[head].frame && head + 1 < n && lw[head + 1] == "of") {
      i = head + 2;
      continue;
    }

    const std::string prev = start > 0 ? lw[start - 1] : std::string();
    bool attach = false;
    if (start > 0 && !out.entities.empty()) {
      if (prev == "of" && follows_last_entity(start - 1)) {
        attach = true;
      } else if (is_attach_trigger(prev) && tags[head].attribute && follows_last_entity(start - 1)) {
        attach = true;
      } else if ((prev == "and" || prev == ",") && last_chunk_attached && tags[head].attribute &&
                 follows_last_entity(start - 1)) {
        attach = true;
      }
    }

    if (attach) {
      Entity& e = out.entities.back();
      for (std::size_t m = j; m <= head; ++m) {
        if (tags[m].pos == PosTag::kNoun) e.attribute_nouns.push_back(out.tokens[m]);
        else add_adjective(e, m, head, out.tokens[m]);
      }
      e.span.end = head + 1;
      last_chunk_attached = true;
    } else {
      Entity e;
      e.root = out.tokens[head];
      e.span = {start, head + 1};
      for (std::size_t m = j; m < head; ++m) {
        if (tags[m].pos == PosTag::kNoun) e.attribute_nouns.push_back(out.tokens[m]);
        else add_adjective(e, m, head, out.tokens[m]);
      }
      std::vector<std::string> label_words(words.begin() + static_cast<std::ptrdiff_t>(j),
                                           words.begin() + static_cast<std::ptrdiff_t>(head + 1));
      e.label = join_tokens(label_words);
      for (std::size_t a : pending_adjectives) add_adjective(e, a, head, out.tokens[a]);
      if (!pending_adjectives.empty()) e.span.begin = std::min(e.span.begin, pending_adjectives.front());
      pending_adjectives.clear();
      out.entities.push_back(std::move(e));
      last_chunk_attached = false;
    }
    // Adjectives trailing the head inside the run are stranded modifiers.
    std::vector<std::size_t> trailing;
    for (std::size_t m = head + 1; m < k; ++m) trailing.push_back(m);
    attach_stranded(trailing);
    i = k;
  }

  const std::size_t m = out.entities.size();
  out.exclusion_sets.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a != b) out.exclusion_sets[a].push_back(b);
    }
  }
  return out;
}

// The subject noun phrase core: contiguous nouns ending at the first entity's root.
std::pair<std::size_t, std::size_t> subject_core(const ParsedExpression& parsed) {
  const Entity& e = parsed.entities.front();
  std::size_t begin = e.root.index;
  while (begin > e.span.begin && parsed.tokens[begin - 1].pos == PosTag::kNoun) --begin;
  return {begin, e.root.index + 1};
}

// Adjectives and nouns directly in front of the subject root, plus the root.
std::pair<std::size_t, std::size_t> subject_phrase(const ParsedExpression& parsed) {
  const Entity& e = parsed.entities.front();
  std::size_t begin = e.root.index;
  while (begin > e.span.begin && (parsed.tokens[begin - 1].pos == PosTag::kNoun ||
                                  parsed.tokens[begin - 1].pos == PosTag::kAdj)) {
    --begin;
  }
  return {begin, e.root.index + 1};
}

std::string replace_core(const ParsedExpression& parsed, std::pair<std::size_t, std::size_t> core,
                         std::string_view replacement) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < core.first; ++i) words.push_back(parsed.tokens[i].surface);
  words.emplace_back(replacement);
  for (std::size_t i = core.second; i < parsed.tokens.size(); ++i) {
    words.push_back(parsed.tokens[i].surface);
  }
  return join_tokens(words);
}

std::vector<std::string> table_variants(const SynonymTable& table, const ParsedExpression& parsed) {
  if (parsed.entities.empty()) return {};
  const auto core = subject_core(parsed);
  std::vector<std::string> core_words;
  for (std::size_t i = core.first; i < core.second; ++i) core_words.push_back(lower(parsed.tokens[i].surface));
  const std::string phrase = join_tokens(core_words);
  const std::string root = lower(parsed.entities.front().root.surface);

  std::vector<std::string> out;
  auto find = [&](const std::string& key) -> const std::vector<std::string>* {
    for (const auto& [k, v] : table) {
      if (k == key) return &v;
    }
    return nullptr;
  };
  if (const auto* syn = find(phrase)) {
    for (const auto& s : *syn) out.push_back(replace_core(parsed, core, s));
  } else if (const auto* syn_root = find(root)) {
    const std::pair<std::size_t, std::size_t> root_only{parsed.entities.front().root.index,
                                                        parsed.entities.front().root.index + 1};
    for (const auto& s : *syn_root) out.push_back(replace_core(parsed, root_only, s));
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<std::size_t> Entity::concept_tokens() const {
  std::vector<std::size_t> out{root.index};
  for (const auto& t : attribute_nouns) out.push_back(t.index);
  for (const auto& t : adjectives) out.push_back(t.index);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> ParsedExpression::concept_tokens() const {
  std::vector<std::size_t> out;
  for (const auto& e : entities) {
    auto c = e.concept_tokens();
    out.insert(out.end(), c.begin(), c.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += ch;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  const std::string norm = normalize_whitespace(text);
  std::size_t pos = 0;
  auto strip_char = [](char c) {
    return c == '.' || c == '!' || c == '?' || c == ':' || c == '"' || c == '(' || c == ')' ||
           c == '[' || c == ']' || c == '{' || c == '}' || c == '`';
  };
  while (pos < norm.size()) {
    std::size_t end = norm.find(' ', pos);
    if (end == std::string::npos) end = norm.size();
    std::string_view word(norm.data() + pos, end - pos);
    pos = end + 1;
    std::vector<std::string> trailing;
    while (!word.empty() && (strip_char(word.front()) || word.front() == '\'' || word.front() == ',')) {
      word.remove_prefix(1);
    }
    while (!word.empty()) {
      const char c = word.back();
      if (c == ',' || c == ';') {
        trailing.insert(trailing.begin(), std::string(1, c));
      } else if (!strip_char(c) && c != '\'') {
        break;
      }
      word.remove_suffix(1);
    }
    // Keep "s'" plural possessives intact.
    if (!word.empty()) out.emplace_back(word);
    for (auto& t : trailing) {
      if (!out.empty()) out.push_back(std::move(t));
    }
  }
  // Leading or doubled separators carry no structure.
  std::vector<std::string> cleaned;
  for (auto& w : out) {
    if (is_boundary_word(w) && (cleaned.empty() || is_boundary_word(cleaned.back()))) continue;
    cleaned.push_back(std::move(w));
  }
  while (!cleaned.empty() && is_boundary_word(cleaned.back())) cleaned.pop_back();
  return cleaned;
}

std::optional<LexEntry> lexicon_lookup(std::string_view lowercase_word) {
  const unsigned f = word_flags(lowercase_word);
  if (f == 0) return std::nullopt;
  LexEntry e;
  e.attribute_noun = (f & kAttr) != 0;
  if (f & kFunction) e.pos = PosTag::kOther;
  else if (f & kNoun) e.pos = PosTag::kNoun;
  else if (f & kAdjective) e.pos = PosTag::kAdj;
  else if (f & kVerbWord) e.pos = PosTag::kVerb;
  return e;
}

std::size_t lexicon_size() { return lexicon().size(); }

std::vector<std::string> lexicon_words() {
  std::vector<std::string> out;
  out.reserve(lexicon().size());
  for (const auto& [word, flags] : lexicon()) out.push_back(word);
  std::sort(out.begin(), out.end());
  return out;
}

PosTag guess_pos(std::string_view word, const std::string* previous) {
  std::vector<std::string> words;
  if (previous) words.push_back(lower(*previous));
  words.push_back(lower(word));
  return tag_words(words).back().pos;
}

const SynonymTable& builtin_synonyms() {
  static const SynonymTable table = {
      {"apple pieces", {"apple slices", "cut up apples", "apple chunks"}},
      {"car", {"automobile", "vehicle", "auto"}},
      {"ball", {"sphere", "orb", "globe"}},
      {"box", {"crate", "carton", "chest"}},
      {"stone", {"rock", "pebble", "boulder"}},
      {"cushion", {"pillow", "pad", "bolster"}},
      {"rug", {"carpet", "mat", "runner"}},
      {"coin", {"token", "disk", "medallion"}},
      {"cup", {"mug", "beaker", "tumbler"}},
      {"plate", {"dish", "platter", "saucer"}},
      {"boat", {"ship", "vessel", "dinghy"}},
      {"dog", {"puppy", "hound", "canine"}},
      {"cat", {"kitten", "feline", "kitty"}},
      {"bird", {"sparrow", "songbird", "fowl"}},
      {"flower", {"blossom", "bloom", "rose"}},
      {"bucket", {"pail", "tub", "bin"}},
      {"lamp", {"lantern", "lampshade", "torch"}},
      {"man", {"guy", "gentleman", "person", "adult male"}},
      {"woman", {"lady", "person", "adult female"}},
      {"boy", {"kid", "child", "young man"}},
      {"girl", {"kid", "child", "young lady"}},
      {"donut", {"doughnut", "pastry", "ring cake"}},
      {"bike", {"bicycle", "cycle", "pushbike"}},
      {"couch", {"sofa", "settee", "loveseat"}},
      {"bus", {"coach", "minibus", "shuttle"}},
      {"truck", {"lorry", "pickup", "van"}},
      {"horse", {"pony", "stallion", "mare"}},
      {"elephant", {"pachyderm", "tusker", "jumbo"}},
  };
  return table;
}

RuleParser::RuleParser() : synonyms_(builtin_synonyms()) {}
RuleParser::RuleParser(SynonymTable synonyms) : synonyms_(std::move(synonyms)) {}

ParsedExpression RuleParser::parse(std::string_view text) const {
  const auto words = tokenize(text);
  std::vector<std::string> lw;
  lw.reserve(words.size());
  for (const auto& w : words) lw.push_back(lower(w));
  return build_parse(join_tokens(words), words, tag_words(lw));
}

std::vector<std::string> RuleParser::variant_candidates(std::string_view, const ParsedExpression& parsed,
                                                        std::size_t) const {
  return table_variants(synonyms_, parsed);
}

TaggerParser::TaggerParser(Tagger tagger, SynonymTable synonyms)
    : tagger_(std::move(tagger)), fallback_(std::move(synonyms)) {}

ParsedExpression TaggerParser::parse(std::string_view text) const {
  const auto words = tokenize(text);
  std::vector<std::string> lw;
  for (const auto& w : words) lw.push_back(lower(w));
  const auto external = tagger_(words);
  if (external.size() != words.size()) {
    throw Error(ErrorCode::kBackendUnavailable, "external tagger returned wrong tag count");
  }
  auto tags = tag_words(lw);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].boundary) continue;
    tags[i].pos = external[i];
    if (external[i] != PosTag::kOther) tags[i].determiner = false;
  }
  return build_parse(join_tokens(words), words, std::move(tags));
}

std::vector<std::string> TaggerParser::variant_candidates(std::string_view text,
                                                          const ParsedExpression& parsed,
                                                          std::size_t n) const {
  return fallback_.variant_candidates(text, parsed, n);
}

const std::string_view kParsePromptTemplate =
    "As a NLP expert, you will be provided a caption describing an image. Please do pos tag the "
    "caption and identify the only one referred subject object and all adjective attributes. Your "
    "response should be in the format of \"[(attribute1, attribute2, attribute3, ...), object1]\"\n"
    "Conditions:\n"
    "(1) If the attribute is long, short it by picking one original word.\n"
    "(2) Please include one original word possessive source into the attributes for the subject.";

const std::string_view kSynonymPromptTemplate =
    "As a NLP expert, please genrate a list of n synonyms of the noun phrases in the following "
    "[sentence] and output the list separated by '&'";

std::string render_parse_prompt(std::string_view caption) {
  return std::string(kParsePromptTemplate) + "\nCaption: " + std::string(caption);
}

std::string render_synonym_prompt(std::string_view sentence, std::size_t n) {
  std::string out(kSynonymPromptTemplate);
  const std::string count = std::to_string(n);
  if (auto p = out.find("of n synonyms"); p != std::string::npos) out.replace(p + 3, 1, count);
  if (auto p = out.find("[sentence]"); p != std::string::npos) {
    out.replace(p, 10, "[" + std::string(sentence) + "]");
  }
  return out;
}

LlmParseReply parse_llm_reply(std::string_view reply) {
  const std::string raw(reply);
  auto fail = [&](const char* why) -> LlmParseReply {
    throw Error(ErrorCode::kBackendUnavailable, std::string("malformed parser reply: ") + why, raw);
  };
  std::string s = trim(reply);
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  };
  auto expect = [&](char c) {
    skip_ws();
    if (pos >= s.size() || s[pos] != c) return false;
    ++pos;
    return true;
  };
  auto item = [&](std::string_view stops) -> std::optional<std::string> {
    skip_ws();
    std::size_t b = pos;
    while (pos < s.size() && stops.find(s[pos]) == std::string_view::npos) {
      if (s[pos] == '[' || s[pos] == '(' || s[pos] == ']' || s[pos] == ')') return std::nullopt;
      ++pos;
    }
    std::string v = trim(std::string_view(s).substr(b, pos - b));
    if (v.size() >= 2 && (v.front() == '\'' || v.front() == '"') && v.back() == v.front()) {
      v = v.substr(1, v.size() - 2);
    }
    if (v.empty()) return std::nullopt;
    return v;
  };

  LlmParseReply out;
  if (!expect('[')) return fail("expected '['");
  if (!expect('(')) return fail("expected '('");
  skip_ws();
  if (pos < s.size() && s[pos] == ')') {
    ++pos;
  } else {
    while (true) {
      auto a = item(",)");
      if (!a) return fail("bad attribute");
      out.attributes.push_back(*a);
      if (expect(',')) continue;
      if (expect(')')) break;
      return fail("expected ',' or ')'");
    }
  }
  if (!expect(',')) return fail("expected ',' after attributes");
  auto obj = item("]");
  if (!obj) return fail("bad object");
  out.object = *obj;
  if (!expect(']')) return fail("expected ']'");
  skip_ws();
  if (pos != s.size()) return fail("trailing text");
  return out;
}

LlmParser::LlmParser(std::shared_ptr<LlmTransport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::kBackendUnavailable, "no LLM transport");
}

std::string LlmParser::ask(const std::string& prompt) const {
  std::lock_guard lock(mutex_);
  return transport_->complete(prompt);
}

ParsedExpression LlmParser::parse(std::string_view text) const {
  const auto words = tokenize(text);
  std::vector<std::string> lw;
  for (const auto& w : words) lw.push_back(lower(w));
  auto tags = tag_words(lw);

  const std::string joined = join_tokens(words);
  const std::string raw = ask(render_parse_prompt(joined));
  const LlmParseReply reply = parse_llm_reply(raw);

  auto find_word = [&](std::string_view phrase) -> std::optional<std::size_t> {
    // Multi-word items resolve to their last word.
    std::string w = lower(trim(phrase));
    if (auto sp = w.rfind(' '); sp != std::string::npos) w = w.substr(sp + 1);
    for (std::size_t i = 0; i < lw.size(); ++i) {
      bool poss = false;
      if (lw[i] == w || strip_possessive(lw[i], poss) == w) return i;
    }
    return std::nullopt;
  };

  ParsedExpression out;
  out.text = joined;
  const auto root = find_word(reply.object);
  if (!root) throw Error(ErrorCode::kBackendUnavailable, "object not found in expression", raw);
  std::vector<std::size_t> attrs;
  for (const auto& a : reply.attributes) {
    const auto idx = find_word(a);
    if (!idx) throw Error(ErrorCode::kBackendUnavailable, "attribute not found in expression", raw);
    if (*idx != *root) attrs.push_back(*idx);
  }
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());

  for (std::size_t i = 0; i < words.size(); ++i) {
    PosTag pos = tags[i].pos;
    if (i == *root) pos = PosTag::kNoun;
    else if (std::binary_search(attrs.begin(), attrs.end(), i)) pos = PosTag::kAdj;
    else if (pos == PosTag::kNoun || pos == PosTag::kAdj) pos = PosTag::kOther;
    out.tokens.push_back(Token{words[i], i, pos});
    if (pos == PosTag::kVerb) out.predicates.push_back(out.tokens.back());
  }
  Entity e;
  e.root = out.tokens[*root];
  std::size_t lo = *root;
  std::size_t hi = *root;
  for (std::size_t a : attrs) {
    e.adjectives.push_back(out.tokens[a]);
    e.adjective_heads.push_back(*root);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  e.span = {lo, hi + 1};
  e.label = words[*root];
  out.entities.push_back(std::move(e));
  out.exclusion_sets.resize(1);
  return out;
}

std::vector<std::string> LlmParser::variant_candidates(std::string_view text,
                                                       const ParsedExpression& parsed,
                                                       std::size_t n) const {
  const std::string raw = ask(render_synonym_prompt(text, n));
  std::vector<std::string> out;
  if (parsed.entities.empty()) return out;
  const auto core = subject_phrase(parsed);
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t end = raw.find('&', pos);
    if (end == std::string::npos) end = raw.size();
    std::string piece = trim(std::string_view(raw).substr(pos, end - pos));
    if (!piece.empty()) out.push_back(replace_core(parsed, core, piece));
    pos = end + 1;
  }
  return out;
}

ParsedExpression parse_expression(std::string_view text, const ParserBackend& backend) {
  const std::string norm = normalize_whitespace(text);
  if (tokenize(norm).empty()) throw Error(ErrorCode::kEmptyExpression, "expression has no tokens");
  ParsedExpression parsed = backend.parse(norm);
  if (parsed.entities.empty()) {
    throw Error(ErrorCode::kNoEntityFound, "no noun found in \"" + norm + "\"");
  }
  for (const auto& e : parsed.entities) {
    if (e.root.pos != PosTag::kNoun) {
      throw Error(ErrorCode::kBackendUnavailable, "backend returned a non-noun entity root");
    }
  }
  return parsed;
}

std::vector<std::string> mutate_expression(std::string_view text, std::size_t n,
                                           const ParserBackend& backend, Rng& rng) {
  if (n == 0) return {};
  const ParsedExpression parsed = parse_expression(text, backend);
  const std::string original = lower(parsed.text);
  std::vector<std::string> pool;
  std::set<std::string> seen{original};
  for (auto& v : backend.variant_candidates(parsed.text, parsed, n)) {
    if (seen.insert(lower(v)).second) pool.push_back(std::move(v));
  }
  if (pool.size() < n) {
    throw Error(ErrorCode::kInsufficientSynonyms,
                "need " + std::to_string(n) + " variants, have " + std::to_string(pool.size()));
  }
  std::vector<std::string> out;
  out.reserve(n);
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), n, rng);
  return out;
}

std::size_t study_variant_count(Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(2, 5);
  return dist(rng);
}

}  // namespace anyword::textgraph
