#ifndef LIOUVILLE_MANIFEST_HPP_
#define LIOUVILLE_MANIFEST_HPP_

#include <cstdint>
#include <string>

namespace liouville {

inline constexpr const char* kCodeVersion = "1.0.0";

std::string sha256_hex(const std::string& data);

// Everything needed to rerun a command. `request` is the canonical JSON the
// command was executed from; the hash covers request and code version only.
struct RunManifest {
  std::string command;
  std::string request;
  std::uint64_t seed = 0;
  std::string grid;
  std::string code_version = kCodeVersion;
  std::string started, finished;  // ISO-8601 UTC

  std::string hash() const;
  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

std::string utc_timestamp();

}  // namespace liouville

#endif  // LIOUVILLE_MANIFEST_HPP_
