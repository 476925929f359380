#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "certikit/error.hpp"
#include "certikit/io.hpp"

namespace certikit {

struct ConfigKey {
  const char* name;
  const char* fallback;  // "" = no default
  const char* help;
};

/// Every recognized key with its default. Anything else is rejected.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"command", "", "certify|agree|star|coeff|curve|tightness|reweight-demo|attack|conic"},
      {"class", "", "singletons:N | halfspaces:D | affine:D | prop53:D:K | finite:PATH"},
      {"data", "", "dataset CSV (point,label or x1..xd,label)"},
      {"test", "", "test point: id or comma-separated coordinates"},
      {"label", "1", "claimed label at the test point (+1/-1)"},
      {"b", "0", "corruption budget"},
      {"method", "greedy", "certify method: greedy|exact|caratheodory|chunked"},
      {"order", "descending", "greedy deletion order: descending|ascending"},
      {"size_cap", "6", "exact method: largest certificate size searched"},
      {"chunk_size", "0", "chunked method: chunk size, 0 = auto"},
      {"chunks_needed", "0", "chunked method: qualifying chunks, 0 = b+1"},
      {"max_chunks", "100000", "chunked method: chunks scanned before giving up"},
      {"dist", "", "uniform:ID,ID,... | table:ID=P,... | ball:R:C1,...,Cd"},
      {"target", "", "target hypothesis: index, or lifted weights for halfspaces"},
      {"seed", "1", "master seed"},
      {"trials", "500", "trials per sample size"},
      {"m_grid", "", "comma-separated sample sizes"},
      {"eps", "", "certificate coefficient for the curve grid (replaces m_grid)"},
      {"delta", "0.1", "failure probability"},
      {"C", "8", "leading constant of the sample size bound"},
      {"term", "b", "tightness term: b|dlog|delta"},
      {"n", "11", "tightness b term: singletons size"},
      {"d", "", "dimension (tightness default 2, reweight-demo default 6)"},
      {"k", "30", "tightness dlog/delta terms: domain size"},
      {"radius", "0.5", "reweight-demo: radius of the ball indicator"},
      {"reweight_C", "6", "reweight-demo: leading constant for the accepted-sample target"},
      {"safety", "2", "divisor applied to Monte Carlo coefficient estimates"},
      {"mc_samples", "100000", "Monte Carlo samples for coefficient estimates"},
      {"attempt_cap", "10000000", "rejection sampler attempts per accepted point"},
      {"shrink", "true", "reweight-demo: shrink the sample to a minimal certificate"},
      {"mode", "random", "attack mode: random|worst"},
      {"flip_guard", "1000000", "worst-case attack: max flip sets"},
      {"deletion_guard", "1000000", "halfspace oracle: max deletion subsets"},
      {"tol", "1e-09", "LP feasibility tolerance"},
      {"star_guard", "200000000", "hollow star search: max search space"},
      {"multiplicity_cap", "0", "hollow star search: copies per pair, 0 = b+1"},
      {"star_size_cap", "0", "hollow star search: max size, 0 = 2(b+1)|domain|"},
      {"dump", "false", "conic: print the result JSON"},
      {"threads", "0", "worker threads, 0 = CERTIKIT_THREADS or hardware"},
      {"output_dir", "certikit-out", "directory for artifacts"},
  };
  return keys;
}

class Config {
 public:
  /// "key = value" lines; '#' starts a comment line.
  static Config parse(std::istream& in) {
    Config c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = io::trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
      c.set(io::trim(t.substr(0, eq)), io::trim(t.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    return parse(in);
  }

  void set(const std::string& key, const std::string& value) {
    const auto& keys = config_keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return key == k.name; })) {
      throw InputError("unknown config key '" + key + "'");
    }
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> raw(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    for (const auto& k : config_keys()) {
      if (key == k.name && *k.fallback) return std::string(k.fallback);
    }
    return std::nullopt;
  }

  std::string str(const std::string& key) const {
    if (auto v = raw(key)) return *v;
    throw InputError("missing required config key '" + key + "'");
  }

  std::uint64_t uint(const std::string& key) const { return io::parse_uint(str(key)); }
  double real(const std::string& key) const { return io::parse_double(str(key)); }

  bool flag(const std::string& key) const {
    const auto v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InputError("config key '" + key + "' must be true or false");
  }

  /// Explicit settings as sorted "key = value" lines.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// FNV-1a, for the manifest's config hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace certikit
