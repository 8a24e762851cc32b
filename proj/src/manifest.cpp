#include "liouville/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "liouville/errors.hpp"

namespace liouville {

using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw Error("sha256 failed");
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string RunManifest::hash() const {
  return sha256_hex(json{{"command", command}, {"request", request}, {"code_version", code_version}}.dump());
}

std::string RunManifest::to_json() const {
  json j = {{"command", command},
            {"request", json::parse(request)},
            {"seed", seed},
            {"grid", grid.empty() ? json(nullptr) : json::parse(grid)},
            {"code_version", code_version},
            {"started", started},
            {"finished", finished},
            {"hash", hash()}};
  return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("manifest: ") + e.what());
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.request = j.at("request").dump();
  m.seed = j.value("seed", std::uint64_t(0));
  if (j.contains("grid") && !j["grid"].is_null()) m.grid = j["grid"].dump();
  m.code_version = j.value("code_version", std::string(kCodeVersion));
  m.started = j.value("started", std::string());
  m.finished = j.value("finished", std::string());
  if (j.contains("hash") && j["hash"].get<std::string>() != m.hash())
    throw ConsistencyError("manifest: hash does not match its contents");
  return m;
}

void RunManifest::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DomainError("manifest: cannot write " + path);
  f << to_json() << "\n";
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("manifest: cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace liouville
