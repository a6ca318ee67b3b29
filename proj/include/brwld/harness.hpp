// Replica fan-out, order-independent aggregation and config digests.
//
// Estimates are pure functions of (seed, replica count, config): replica i
// always consumes the stream derived from (seed, i), partial results are
// keyed by block index and merged in index order, so the result does not
// depend on how many worker threads ran the blocks.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "brwld/rng.hpp"

namespace brwld {

struct EstimateRecord {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t replicas = 0;
  std::uint64_t invalid_replicas = 0;
  double bias_bound = 0.0;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
};

// One block of replicas: running mean / second central moment / count,
// in extended precision.
struct Partial {
  std::uint64_t index = 0;
  long double mean = 0.0L;
  long double m2 = 0.0L;
  std::uint64_t count = 0;
  std::uint64_t invalid = 0;
  long double bias = 0.0L;

  void add(long double value) {
    ++count;
    const long double delta = value - mean;
    mean += delta / static_cast<long double>(count);
    m2 += delta * (value - mean);
  }

  // Chan's pairwise combination of (mean, M2, count)
  void merge(const Partial& o) {
    if (o.count > 0) {
      if (count == 0) {
        mean = o.mean;
        m2 = o.m2;
        count = o.count;
      } else {
        const long double delta = o.mean - mean;
        const std::uint64_t total = count + o.count;
        const long double na = static_cast<long double>(count);
        const long double nb = static_cast<long double>(o.count);
        mean = mean + delta * nb / static_cast<long double>(total);
        m2 = m2 + o.m2 + delta * delta * na * nb / static_cast<long double>(total);
        count = total;
      }
    }
    invalid += o.invalid;
    bias += o.bias;
  }
};

inline EstimateRecord aggregate(std::vector<Partial> partials) {
  std::sort(partials.begin(), partials.end(),
            [](const Partial& a, const Partial& b) { return a.index < b.index; });
  Partial total;
  for (const auto& p : partials) total.merge(p);
  if (total.count == 0) throw std::runtime_error("aggregate: zero valid replicas");
  EstimateRecord rec;
  rec.mean = static_cast<double>(total.mean);
  if (total.count > 1) {
    const long double var = total.m2 / static_cast<long double>(total.count - 1);
    rec.stderr_ = static_cast<double>(std::sqrt(var / static_cast<long double>(total.count)));
  }
  rec.replicas = total.count;
  rec.invalid_replicas = total.invalid;
  rec.bias_bound = static_cast<double>(total.bias);
  return rec;
}

inline unsigned harness_threads() {
  if (const char* env = std::getenv("BRWLD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

struct ReplicaOutcome {
  double value = 0.0;
  bool valid = true;
  double bias = 0.0;
};

// Runs `replicas` independent replicas of `fn(stream, replica_index)` and
// aggregates them.  Blocks of fixed size are the unit of work; thread count
// affects speed only.
template <class Fn>
EstimateRecord run_replicas(std::uint64_t seed, std::uint64_t replicas, Fn&& fn,
                            std::uint64_t block_size = 1024) {
  if (replicas == 0) throw std::invalid_argument("run_replicas: replicas must be positive");
  const std::uint64_t blocks = (replicas + block_size - 1) / block_size;
  std::vector<Partial> partials(blocks);

  auto run_block = [&](std::uint64_t b) {
    Partial p;
    p.index = b;
    const std::uint64_t lo = b * block_size;
    const std::uint64_t hi = std::min(lo + block_size, replicas);
    for (std::uint64_t i = lo; i < hi; ++i) {
      Stream stream = derive_stream(seed, i);
      const ReplicaOutcome out = fn(stream, i);
      if (out.valid) {
        p.add(out.value);
        p.bias += out.bias;
      } else {
        ++p.invalid;
      }
    }
    partials[b] = p;
  };

  const unsigned threads = std::min<std::uint64_t>(harness_threads(), blocks);
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::uint64_t b = t; b < blocks; b += threads) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  EstimateRecord rec = aggregate(std::move(partials));
  rec.seed = seed;
  return rec;
}

// FNV-1a over the canonicalized config string.
inline std::uint64_t config_digest(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace brwld
