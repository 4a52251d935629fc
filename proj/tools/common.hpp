#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace cli {

// Outputs registered here are deleted when a stage fails partway.
class ArtifactTracker {
 public:
  void add(const std::string& path) { paths_.push_back(path); }

  void discard_all() {
    for (const auto& p : paths_) std::remove(p.c_str());
    paths_.clear();
  }

  void keep_all() { paths_.clear(); }

 private:
  std::vector<std::string> paths_;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Every run logs its seed and the hash of the effective configuration, so
// any artifact can be tied back to the exact invocation that produced it.
inline void write_effective_config(const std::string& path,
                                   const std::string& subcommand,
                                   const std::string& config_str,
                                   std::uint64_t seed,
                                   ArtifactTracker& artifacts) {
  std::ofstream out(path);
  out << "# vecspec " << subcommand << " effective configuration\n";
  out << "# config-hash " << hex64(fnv1a64(config_str)) << "\n";
  out << config_str;
  artifacts.add(path);
  std::cerr << "[vecspec] " << subcommand << ": seed=" << seed
            << " config-hash=" << hex64(fnv1a64(config_str)) << "\n";
}

}  // namespace cli
