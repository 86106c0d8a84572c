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

#ifndef NERCTC_UTF8_H_
#define NERCTC_UTF8_H_

#include <string>
#include <string_view>

namespace nerctc::utf8 {

// Throws DataError on invalid UTF-8.
std::u32string decode(std::string_view s);
std::string encode(char32_t c);
std::string encode(std::u32string_view s);

// Lowercases ASCII, Latin-1 and the French ligatures; other code points
// pass through unchanged.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view s);

}  // namespace nerctc::utf8

#endif  // NERCTC_UTF8_H_
