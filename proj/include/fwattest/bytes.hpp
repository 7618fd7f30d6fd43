/*
 *
 * Copyright 2026 The fwattest Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef FWATTEST_BYTES_HPP_
#define FWATTEST_BYTES_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fwattest {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Base for every error the library throws. Rejections from the monitor are
// values, not exceptions; these are for contract violations and I/O.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_hex(ByteView bytes);

// Accepts upper or lower case; nullopt on odd length or a non-hex digit.
std::optional<Bytes> from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string_view as_chars(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

Bytes read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, optionally fsyncs it, and renames over
// `path`.
void write_file_atomic(const std::filesystem::path& path, ByteView data,
                       bool sync = true);

}  // namespace fwattest

#endif  // FWATTEST_BYTES_HPP_
