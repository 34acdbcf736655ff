#ifndef CAVG_DIGEST_HPP
#define CAVG_DIGEST_HPP

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>

#include "cavg/error.hpp"
#include "cavg/ontology.hpp"

namespace cavg {

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::string out;
  out.reserve(2 * len);
  char hex[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(hex, sizeof hex, "%02x", md[i]);
    out += hex;
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

// Directory-per-key store: <root>/<key>/... Entries are written to a
// temporary sibling and renamed into place, so a reader never sees a
// half-written entry.
class StageCache {
 public:
  explicit StageCache(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }

  std::optional<std::filesystem::path> lookup(const std::string& key) const {
    const auto dir = root_ / key;
    std::error_code ec;
    if (std::filesystem::is_directory(dir, ec)) return dir;
    return std::nullopt;
  }

  // Copies the contents of `src` in as the entry for `key`.
  void store(const std::string& key, const std::filesystem::path& src) const {
    namespace fs = std::filesystem;
    fs::create_directories(root_);
    const auto tmp = root_ / (key + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::copy(src, tmp, fs::copy_options::recursive);
    std::error_code ec;
    fs::rename(tmp, root_ / key, ec);
    // Lost a race with an identical writer: keep theirs.
    if (ec) fs::remove_all(tmp);
  }

 private:
  std::filesystem::path root_;
};

}  // namespace cavg

#endif  // CAVG_DIGEST_HPP
