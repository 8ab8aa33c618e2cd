// Copyright 2026 the plaf authors
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

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <type_traits>
#include <vector>

namespace plaf::detail {

template <typename T>
void storeLE(std::byte* dst, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::memcpy(dst, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(dst, dst + sizeof(T));
  }
}

template <typename T>
T loadLE(const std::byte* src) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::byte tmp[sizeof(T)];
  std::memcpy(tmp, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(tmp, tmp + sizeof(T));
  }
  T value;
  std::memcpy(&value, tmp, sizeof(T));
  return value;
}

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t capacity) { buf_.reserve(capacity); }

  template <typename T>
  void put(T value) {
    const std::size_t at = buf_.size();
    buf_.resize(at + sizeof(T));
    storeLE(buf_.data() + at, value);
  }

  template <typename T>
  void putArray(std::span<const T> values) {
    const std::size_t at = buf_.size();
    buf_.resize(at + values.size() * sizeof(T));
    if constexpr (std::endian::native == std::endian::little) {
      if (!values.empty()) {
        std::memcpy(buf_.data() + at, values.data(), values.size() * sizeof(T));
      }
    } else {
      for (std::size_t i = 0; i < values.size(); ++i) {
        storeLE(buf_.data() + at + i * sizeof(T), values[i]);
      }
    }
  }

  void putBytes(const char* s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) buf_.push_back(std::byte(s[i]));
  }

  void padTo(std::size_t size) {
    if (buf_.size() < size) buf_.resize(size, std::byte{0});
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<std::byte> take() { return std::move(buf_); }

 private:
  std::vector<std::byte> buf_;
};

template <typename T>
std::vector<T> loadArray(const std::byte* src, std::size_t count) {
  std::vector<T> out(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (count > 0) std::memcpy(out.data(), src, count * sizeof(T));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = loadLE<T>(src + i * sizeof(T));
    }
  }
  return out;
}

}  // namespace plaf::detail
