#pragma once

// On-disk cache of power sums S_m keyed by (p, m, canonical expression hash).
// Values are stored as hexadecimal floats so a warm read is bit-identical to the
// cold computation. Each (p, expression) pair owns one file, rewritten through a
// temporary file and an atomic rename.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>

#include "sheafcx/run_config.hpp"
#include "sheafcx/sum_engine.hpp"

namespace sheafcx {

struct CacheKey {
  u64 p = 0;
  int m = 1;
  u64 expr_hash = 0;  // canonical hash of the expression together with its ambient
  auto operator<=>(const CacheKey&) const = default;
};

/// Canonical hash of an expression evaluated on A^n with a given extension-field seed.
inline u64 cache_hash(const Expr& e, int ambient, u64 field_seed = 0) {
  return fnv1a(canonical_string(e) + "@" + std::to_string(ambient) + "/" + std::to_string(field_seed));
}

class PowerSumCache {
 public:
  /// An empty directory disables persistence; lookups then only see this process's inserts.
  explicit PowerSumCache(std::string dir = {}) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  std::optional<cplx> get(const CacheKey& k) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = mem_.find(k); it != mem_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    std::unique_lock lock(mutex_);
    load_file(k.p, k.expr_hash);
    if (auto it = mem_.find(k); it != mem_.end()) return it->second;
    return std::nullopt;
  }

  void put(const CacheKey& k, cplx v) {
    std::unique_lock lock(mutex_);
    mem_[k] = v;
    if (!dir_.empty()) store_file(k.p, k.expr_hash);
  }

  /// Power sums S_1..S_M, reusing cached terms and computing the rest.
  std::vector<cplx> power_sums(const Expr& e, u64 p, int M, const SumOptions& opts, PowerSumRoute route = PowerSumRoute::Auto) {
    const int n = opts.ambient > 0 ? opts.ambient : default_ambient(e);
    const u64 h = cache_hash(e, n, opts.field_seed);
    std::vector<cplx> out;
    for (int m = 1; m <= M; ++m) {
      if (auto v = get({p, m, h})) {
        out.push_back(*v);
        ++hits_;
        continue;
      }
      // Compute the missing tail in one call; the routes are deterministic per term.
      const auto fresh = sheafcx::power_sums(e, p, M, opts, route);
      std::unique_lock lock(mutex_);
      for (int j = m; j <= M; ++j) {
        mem_[{p, j, h}] = fresh[static_cast<std::size_t>(j - 1)];
        out.push_back(fresh[static_cast<std::size_t>(j - 1)]);
        ++misses_;
      }
      if (!dir_.empty()) store_file(p, h);
      break;
    }
    return out;
  }

  u64 hits() const { return hits_; }
  u64 misses() const { return misses_; }
  const std::string& dir() const { return dir_; }

 private:
  std::filesystem::path file_for(u64 p, u64 h) const {
    char name[64];
    std::snprintf(name, sizeof name, "ps_%016llx_%llu.txt", static_cast<unsigned long long>(h), static_cast<unsigned long long>(p));
    return std::filesystem::path(dir_) / name;
  }

  static std::string header() { return std::string("sheafcx-cache 1 ") + kVersion; }

  void load_file(u64 p, u64 h) {
    std::ifstream in(file_for(p, h));
    if (!in) return;
    std::string line;
    if (!std::getline(in, line) || line != header()) return;  // other versions are ignored
    while (std::getline(in, line)) {
      int m = 0;
      char re[64], im[64];
      if (std::sscanf(line.c_str(), "%d %63s %63s", &m, re, im) != 3) continue;
      mem_.emplace(CacheKey{p, m, h}, cplx(std::strtod(re, nullptr), std::strtod(im, nullptr)));
    }
  }

  void store_file(u64 p, u64 h) {
    const auto path = file_for(p, h);
    std::ostringstream body;
    body << header() << "\n";
    char buf[160];
    for (auto it = mem_.lower_bound({p, 0, h}); it != mem_.end(); ++it) {
      if (it->first.p != p) break;
      if (it->first.expr_hash != h) continue;
      std::snprintf(buf, sizeof buf, "%d %a %a\n", it->first.m, it->second.real(), it->second.imag());
      body << buf;
    }
    const auto tmp = path.string() + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(this));
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error(Errc::Io, "cannot write cache file " + tmp);
      out << body.str();
    }
    std::filesystem::rename(tmp, path);
  }

  std::string dir_;
  std::map<CacheKey, cplx> mem_;
  std::shared_mutex mutex_;
  u64 hits_ = 0, misses_ = 0;
};

}  // namespace sheafcx
