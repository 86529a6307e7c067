/* Copyright 2026 The lgvqa Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lgvqa {

// Collapses internal whitespace runs to a single space and strips both ends.
std::string normalize_whitespace(std::string_view text);

// Lowercases ASCII letters and splits on ASCII whitespace and punctuation.
// Bytes >= 0x80 (UTF-8 continuation and lead bytes) stay inside tokens.
std::vector<std::string> tokenize(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// True when the string holds an ASCII control character, tab and newline included.
bool has_control_chars(std::string_view text);

std::string to_lower_ascii(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

}  // namespace lgvqa
