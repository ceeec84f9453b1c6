#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace scimetric {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace detail {
constexpr std::uint64_t mix_key(std::uint64_t state, std::uint64_t key) noexcept {
  return splitmix64(state ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
}
constexpr std::uint64_t as_key(std::string_view s) noexcept { return hash_string(s); }
template <std::integral T>
constexpr std::uint64_t as_key(T v) noexcept {
  return static_cast<std::uint64_t>(v);
}
}  // namespace detail

// Seed of the substream addressed by `keys` under `master`. The same key
// tuple always yields the same stream, whatever order streams are created in.
template <class... Keys>
constexpr std::uint64_t substream_seed(std::uint64_t master, const Keys&... keys) noexcept {
  std::uint64_t state = splitmix64(master);
  ((state = detail::mix_key(state, detail::as_key(keys))), ...);
  return state;
}

template <class... Keys>
Engine substream(std::uint64_t master, const Keys&... keys) {
  return Engine(substream_seed(master, keys...));
}

// Worker cap used by the parallel loops below. 0 means hardware concurrency.
void set_thread_limit(unsigned n) noexcept;
unsigned thread_limit() noexcept;

// Runs fn(i) for i in [0, n). Each index must write only to its own slot, so
// results never depend on the schedule.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_limit(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace scimetric
