// Copyright 2026 The nerctc Authors.
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

#include "nerctc/alphabet.h"

#include <set>
#include <sstream>
#include <stdexcept>

#include "nerctc/error.h"
#include "nerctc/io.h"
#include "nerctc/utf8.h"

namespace nerctc {

namespace {

constexpr std::array<std::string_view, 8> kCategoryNames = {
    "pers", "func", "org", "loc", "prod", "amount", "time", "event"};

constexpr std::array<char32_t, 8> kOpenMarkers = {U'[', U'(', U'{', U'$',
                                                  U'&', U'%', U'#', U')'};

constexpr std::string_view kAlphabetMagic = "#nerctc-alphabet";
constexpr int kAlphabetVersion = 1;

std::string symbol_text(char32_t c) {
  if (c == kSpace) return "<space>";
  return utf8::encode(c);
}

}  // namespace

std::string_view category_name(Category c) {
  return kCategoryNames[static_cast<size_t>(c)];
}

std::optional<Category> category_from_name(std::string_view name) {
  for (size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return kAllCategories[i];
  }
  return std::nullopt;
}

char32_t open_marker(Category c) {
  return kOpenMarkers[static_cast<size_t>(c)];
}

std::optional<Category> category_for_marker(char32_t c) {
  for (size_t i = 0; i < kOpenMarkers.size(); ++i) {
    if (kOpenMarkers[i] == c) return kAllCategories[i];
  }
  return std::nullopt;
}

bool is_marker(char32_t c) {
  return c == kCloseMarker || category_for_marker(c).has_value();
}

const std::array<char32_t, 9>& marker_chars() {
  static const std::array<char32_t, 9> chars = [] {
    std::array<char32_t, 9> out{};
    for (size_t i = 0; i < kOpenMarkers.size(); ++i) out[i] = kOpenMarkers[i];
    out[8] = kCloseMarker;
    return out;
  }();
  return chars;
}

void check_tag_map() {
  std::set<char32_t> seen;
  for (Category c : kAllCategories) {
    const char32_t m = open_marker(c);
    if (!seen.insert(m).second || category_for_marker(m) != c) {
      throw std::logic_error("tag map is not a bijection");
    }
  }
  if (!seen.insert(kCloseMarker).second || seen.size() != 9 ||
      category_for_marker(kCloseMarker).has_value() || seen.count(kStar) ||
      seen.count(kSpace)) {
    throw std::logic_error("tag map is not a bijection");
  }
}

// ---------------------------------------------------------------------------
// Alphabet

Alphabet Alphabet::build(std::u32string_view base_chars, bool star_enabled,
                         bool tag_set_enabled) {
  Alphabet a;
  a.symbols_.push_back(U'\0');
  bool has_space = false;
  for (char32_t c : base_chars) {
    if (c == U'\0') throw std::invalid_argument("NUL in base characters");
    if (is_marker(c)) {
      throw std::invalid_argument("marker character '" + utf8::encode(c) +
                                  "' in base characters");
    }
    if (c == kStar) {
      throw std::invalid_argument("star character in base characters");
    }
    if (a.index_.count(c)) {
      throw std::invalid_argument("duplicate base character '" +
                                  symbol_text(c) + "'");
    }
    if (c == kSpace) has_space = true;
    a.index_[c] = a.size();
    a.symbols_.push_back(c);
  }
  if (!has_space) throw std::invalid_argument("base characters lack space");
  a.num_base_ = static_cast<int>(base_chars.size());
  a.space_id_ = a.index_.at(kSpace);
  a.star_enabled_ = star_enabled;
  a.tag_set_enabled_ = tag_set_enabled;
  if (star_enabled) {
    a.index_[kStar] = a.size();
    a.symbols_.push_back(kStar);
  }
  if (tag_set_enabled) {
    for (char32_t m : marker_chars()) {
      a.index_[m] = a.size();
      a.symbols_.push_back(m);
    }
  }
  return a;
}

char32_t Alphabet::symbol(int id) const {
  if (id <= kBlank || id >= size()) {
    throw std::invalid_argument("symbol id out of range: " + std::to_string(id));
  }
  return symbols_[id];
}

std::optional<int> Alphabet::find(char32_t c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Alphabet::is_marker_id(int id) const {
  return id > kBlank && id < size() && is_marker(symbols_[id]);
}

std::vector<int> Alphabet::to_ids(std::string_view text) const {
  std::vector<int> ids;
  for (char32_t c : utf8::decode(text)) {
    auto it = index_.find(c);
    if (it == index_.end()) {
      throw std::invalid_argument("character '" + utf8::encode(c) +
                                  "' not in alphabet");
    }
    ids.push_back(it->second);
  }
  return ids;
}

std::string Alphabet::from_ids(std::span<const int> ids) const {
  std::u32string out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(symbol(id));
  return utf8::encode(out);
}

bool Alphabet::extends(const Alphabet& base) const {
  if (base.star_enabled_ || base.tag_set_enabled_) return false;
  if (num_base_ != base.num_base_) return false;
  return symbols_.compare(0, base.symbols_.size(), base.symbols_) == 0;
}

std::string Alphabet::to_text() const {
  std::ostringstream out;
  out << kAlphabetMagic << " v" << kAlphabetVersion
      << " star=" << (star_enabled_ ? 1 : 0)
      << " tags=" << (tag_set_enabled_ ? 1 : 0) << "\n";
  out << "<blank>\n";
  for (int id = 1; id < size(); ++id) out << symbol_text(symbols_[id]) << "\n";
  return out.str();
}

Alphabet Alphabet::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw DataError("alphabet: empty file");
  std::istringstream hs(header);
  std::string magic, version, star, tags;
  hs >> magic >> version >> star >> tags;
  if (magic != kAlphabetMagic) throw DataError("alphabet: bad magic");
  if (version != "v" + std::to_string(kAlphabetVersion)) {
    throw DataError("alphabet: unsupported version '" + version + "'");
  }
  if ((star != "star=0" && star != "star=1") ||
      (tags != "tags=0" && tags != "tags=1")) {
    throw DataError("alphabet: malformed header '" + header + "'");
  }
  const bool star_enabled = star == "star=1";
  const bool tags_enabled = tags == "tags=1";

  std::vector<char32_t> symbols;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 2) {
      if (line != "<blank>") throw DataError("alphabet: id 0 must be <blank>");
      continue;
    }
    if (line == "<space>") {
      symbols.push_back(kSpace);
      continue;
    }
    const std::u32string cps = utf8::decode(line);
    if (cps.size() != 1) {
      throw DataError("alphabet: line " + std::to_string(lineno) +
                      " is not a single symbol");
    }
    symbols.push_back(cps[0]);
  }
  // Base characters are everything before the optional star and markers.
  size_t extra = (star_enabled ? 1 : 0) + (tags_enabled ? 9 : 0);
  if (symbols.size() < extra) throw DataError("alphabet: too few symbols");
  std::u32string base(symbols.begin(), symbols.end() - extra);
  Alphabet a;
  try {
    a = build(base, star_enabled, tags_enabled);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("alphabet: ") + e.what());
  }
  if (a.symbols_.substr(1) != std::u32string(symbols.begin(), symbols.end())) {
    throw DataError("alphabet: star/marker symbols out of canonical order");
  }
  return a;
}

void Alphabet::save(const std::filesystem::path& path) const {
  io::write_atomic(path, [&](std::ostream& out) { out << to_text(); });
}

Alphabet Alphabet::load(const std::filesystem::path& path) {
  return from_text(io::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Tagged transcripts

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r';
}

bool is_single_char_token(char32_t c) { return c == kStar || is_marker(c); }

std::optional<Category> open_token_category(const std::string& tok) {
  const std::u32string cps = utf8::decode(tok);
  if (cps.size() != 1) return std::nullopt;
  return category_for_marker(cps[0]);
}

bool is_close_token(const std::string& tok) { return tok == "]"; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(utf8::encode(current));
    current.clear();
  };
  for (char32_t c : utf8::decode(text)) {
    if (is_space(c)) {
      flush();
    } else if (is_single_char_token(c)) {
      flush();
      tokens.push_back(utf8::encode(c));
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::string join(std::span<const std::string> words, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

TaggedTranscript TaggedTranscript::from_string(std::string_view tagged) {
  const ParsedTranscript p = parse(tagged, ParsePolicy::kStrict);
  return encode(p.words, p.entities);
}

TaggedTranscript encode(std::span<const std::string> words,
                        std::span<const Entity> entities) {
  std::vector<std::string> tokens;
  tokens.reserve(words.size() + 2 * entities.size());
  size_t next = 0;
  for (const Entity& e : entities) {
    if (e.begin >= e.end) throw std::invalid_argument("empty entity span");
    if (e.end > words.size()) {
      throw std::invalid_argument("entity span out of bounds");
    }
    if (e.begin < next) {
      throw std::invalid_argument("overlapping or unordered entity spans");
    }
    if (!e.value.empty() &&
        e.value != join(words.subspan(e.begin, e.end - e.begin))) {
      throw std::invalid_argument("entity value '" + e.value +
                                  "' does not match its span");
    }
    for (; next < e.begin; ++next) tokens.push_back(words[next]);
    tokens.push_back(utf8::encode(open_marker(e.category)));
    for (; next < e.end; ++next) tokens.push_back(words[next]);
    tokens.push_back("]");
  }
  for (; next < words.size(); ++next) tokens.push_back(words[next]);
  return TaggedTranscript(std::move(tokens));
}

ParsedTranscript parse(std::string_view tagged, ParsePolicy policy) {
  const bool strict = policy == ParsePolicy::kStrict;
  ParsedTranscript out;
  std::optional<std::pair<Category, size_t>> open;

  auto close_at_current = [&](const char* what) {
    const size_t begin = open->second;
    const size_t end = out.words.size();
    if (begin == end) {
      if (strict) throw DataError(std::string("empty entity: ") + what);
    } else {
      Entity e;
      e.category = open->first;
      e.begin = begin;
      e.end = end;
      e.value = join(std::span(out.words).subspan(begin, end - begin));
      out.entities.push_back(std::move(e));
    }
    open.reset();
  };

  for (const std::string& tok : tokenize(tagged)) {
    if (auto cat = open_token_category(tok)) {
      if (open) {
        if (strict) throw DataError("nested entity marker '" + tok + "'");
        close_at_current("implicit close");
      }
      open = std::make_pair(*cat, out.words.size());
    } else if (is_close_token(tok)) {
      if (!open) {
        if (strict) throw DataError("']' without an open entity");
        continue;
      }
      close_at_current("'[...]' holds no word");
    } else {
      out.words.push_back(tok);
    }
  }
  if (open) {
    if (strict) throw DataError("unclosed entity at end of transcript");
    close_at_current("unclosed at end");
  }
  return out;
}

TaggedTranscript star_transform(const TaggedTranscript& tagged) {
  std::vector<std::string> out;
  bool inside = false;
  bool in_outside_run = false;
  for (const std::string& tok : tagged.tokens()) {
    if (open_token_category(tok)) {
      inside = true;
      in_outside_run = false;
      out.push_back(tok);
    } else if (is_close_token(tok)) {
      inside = false;
      out.push_back(tok);
    } else if (inside) {
      out.push_back(tok);
    } else if (!in_outside_run) {
      out.push_back("*");
      in_outside_run = true;
    }
  }
  return TaggedTranscript(std::move(out));
}

std::string star_transform(std::string_view tagged) {
  return star_transform(TaggedTranscript::from_string(tagged)).str();
}

std::string strip_markers(std::string_view tagged) {
  std::vector<std::string> words;
  for (std::string& tok : tokenize(tagged)) {
    if (open_token_category(tok) || is_close_token(tok)) continue;
    words.push_back(std::move(tok));
  }
  return join(words);
}

}  // namespace nerctc
