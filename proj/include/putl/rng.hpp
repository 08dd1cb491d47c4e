#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace putl {

using Rng = std::mt19937_64;

// Independent stream for (seed, ids...). The stream depends only on its key,
// never on which thread or in which order streams are created.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> key;
  key.reserve(2 + 2 * stream.size());
  const auto push = [&key](std::uint64_t v) {
    key.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    key.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(key.begin(), key.end());
  return Rng(seq);
}

}  // namespace putl
