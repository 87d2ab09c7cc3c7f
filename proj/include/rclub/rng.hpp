#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rclub {

// Counter-based stream built on the splitmix64 finalizer: output i of a
// stream with key k is mix(k + (i+1) * golden). Streams for different
// purposes are derived by hashing a tag (or numeric salt) into the key, so
// e.g. arm draws never shift when corruption is toggled, and any round's
// stream can be reconstructed from (seed, tag, t) alone.
class Rng {
 public:
  explicit Rng(uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static uint64_t derive(uint64_t key, std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the tag bytes
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return mix(key ^ mix(h));
  }

  static uint64_t derive(uint64_t key, uint64_t salt) {
    return mix(key + 0x9e3779b97f4a7c15ull * mix(salt + 0x632be59bd9b4e019ull));
  }

  uint64_t next_u64() {
    ctr_ += 0x9e3779b97f4a7c15ull;
    return mix(key_ + ctr_);
  }

  double next_double() {  // uniform in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  int next_int(int n) {  // uniform in [0, n), rejection sampled
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return static_cast<int>(v % un);
  }

  double next_normal() {  // Box-Muller, cosine branch only
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Floyd's algorithm: k distinct values from [0, n) in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> out;
    out.reserve(k);
    std::unordered_set<int> seen;
    for (int j = n - k; j < n; ++j) {
      int t = next_int(j + 1);
      if (seen.count(t)) t = j;
      seen.insert(t);
      out.push_back(t);
    }
    return out;
  }

 private:
  uint64_t key_;
  uint64_t ctr_ = 0;
};

}  // namespace rclub
