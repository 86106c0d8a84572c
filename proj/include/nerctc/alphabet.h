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

#ifndef NERCTC_ALPHABET_H_
#define NERCTC_ALPHABET_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nerctc {

// The eight entity categories, in canonical order.
enum class Category : uint8_t {
  kPers,
  kFunc,
  kOrg,
  kLoc,
  kProd,
  kAmount,
  kTime,
  kEvent,
};

inline constexpr std::array<Category, 8> kAllCategories = {
    Category::kPers, Category::kFunc,   Category::kOrg,  Category::kLoc,
    Category::kProd, Category::kAmount, Category::kTime, Category::kEvent,
};

std::string_view category_name(Category c);
// Accepts the short names ("pers", "func", ...).
std::optional<Category> category_from_name(std::string_view name);

// Marker characters. Each category has its own open marker; a single
// close marker ends every entity. Note that ')' opens an event.
inline constexpr char32_t kCloseMarker = U']';
inline constexpr char32_t kStar = U'*';
inline constexpr char32_t kSpace = U' ';

char32_t open_marker(Category c);
std::optional<Category> category_for_marker(char32_t c);
bool is_marker(char32_t c);
// The nine markers: the eight open markers in category order, then the close.
const std::array<char32_t, 9>& marker_chars();
// Throws std::logic_error if the marker table is not a bijection.
void check_tag_map();

// Lowercase French letters without punctuation, plus the word separator.
inline constexpr std::u32string_view kFrenchBaseChars =
    U" abcdefghijklmnopqrstuvwxyzàâæçèéê"
    U"ëîïôùûüÿœ";

// Ordered emission table: blank at 0, then the base characters, then the
// star (starred mode only), then the nine markers (tagged alphabets only).
class Alphabet {
 public:
  static constexpr int kBlank = 0;

  Alphabet() = default;

  // Throws std::invalid_argument on duplicates, missing space, or a marker
  // or star inside the base set.
  static Alphabet build(std::u32string_view base_chars, bool star_enabled,
                        bool tag_set_enabled);

  int size() const { return static_cast<int>(symbols_.size()); }
  int blank_id() const { return kBlank; }
  int space_id() const { return space_id_; }
  bool star_enabled() const { return star_enabled_; }
  bool tag_set_enabled() const { return tag_set_enabled_; }
  std::u32string_view base_chars() const {
    return std::u32string_view(symbols_).substr(1, num_base_);
  }
  int num_base() const { return num_base_; }

  // Symbol for a non-blank id.
  char32_t symbol(int id) const;
  std::optional<int> find(char32_t c) const;
  bool is_base_id(int id) const { return id >= 1 && id <= num_base_; }
  bool is_marker_id(int id) const;

  // Throws std::invalid_argument naming the first character not in the
  // alphabet. The result never contains the blank.
  std::vector<int> to_ids(std::string_view utf8) const;
  // Throws std::invalid_argument on blank or out-of-range ids.
  std::string from_ids(std::span<const int> ids) const;

  // True if `base` is a prefix of this alphabet: same base characters at
  // the same ids, with nothing beyond them in `base`.
  bool extends(const Alphabet& base) const;

  std::string to_text() const;
  static Alphabet from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Alphabet load(const std::filesystem::path& path);

  bool operator==(const Alphabet& other) const {
    return symbols_ == other.symbols_ && star_enabled_ == other.star_enabled_ &&
           tag_set_enabled_ == other.tag_set_enabled_;
  }

 private:
  std::u32string symbols_;  // symbols_[0] is a placeholder for the blank
  std::unordered_map<char32_t, int> index_;
  int space_id_ = -1;
  int num_base_ = 0;
  bool star_enabled_ = false;
  bool tag_set_enabled_ = false;
};

// A named entity over a word list. Spans are [begin, end) word indices.
struct Entity {
  Category category = Category::kPers;
  std::string value;
  size_t begin = 0;
  size_t end = 0;

  bool operator==(const Entity&) const = default;
};

struct ParsedTranscript {
  std::vector<std::string> words;
  std::vector<Entity> entities;
};

enum class ParsePolicy { kStrict, kRepair };

// Splits on whitespace and additionally isolates every marker and star
// character as its own token, so "[césar]" and "[ césar ]" tokenize alike.
std::vector<std::string> tokenize(std::string_view text);

std::string join(std::span<const std::string> words, std::string_view sep = " ");

// A well-formed tagged token sequence: markers balanced, never nested,
// every entity holding at least one word.
class TaggedTranscript {
 public:
  TaggedTranscript() = default;

  const std::vector<std::string>& tokens() const { return tokens_; }
  // Canonical form: tokens joined by single spaces.
  std::string str() const { return join(tokens_); }

  // Strict parse of a tagged string; throws DataError when malformed.
  static TaggedTranscript from_string(std::string_view tagged);

  bool operator==(const TaggedTranscript&) const = default;

 private:
  friend TaggedTranscript encode(std::span<const std::string>,
                                 std::span<const Entity>);
  friend TaggedTranscript star_transform(const TaggedTranscript&);
  explicit TaggedTranscript(std::vector<std::string> tokens)
      : tokens_(std::move(tokens)) {}

  std::vector<std::string> tokens_;
};

// Inserts an open marker before each span and ']' after it. Entity values,
// when non-empty, must equal the words they cover. Throws
// std::invalid_argument on overlapping, unordered, empty or out-of-range
// spans.
TaggedTranscript encode(std::span<const std::string> words,
                        std::span<const Entity> entities);

// Strict mode throws DataError on unbalanced or nested markers and on empty
// entities. Repair mode never throws on marker structure:
//   - an unmatched open marker is closed at the end of the utterance,
//   - a ']' with no open entity is dropped,
//   - an open marker inside an open entity closes the previous entity
//     immediately before it,
//   - an entity left without words is dropped.
ParsedTranscript parse(std::string_view tagged, ParsePolicy policy);

// Replaces every maximal run of words outside entities with one "*".
TaggedTranscript star_transform(const TaggedTranscript& tagged);
std::string star_transform(std::string_view tagged);

// Removes markers (not stars) and renormalizes spacing.
std::string strip_markers(std::string_view tagged);

}  // namespace nerctc

#endif  // NERCTC_ALPHABET_H_
