#ifndef ANTILEARN_DIGEST_HPP
#define ANTILEARN_DIGEST_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace antilearn {

// Incremental SHA-256 with lowercase hex output. Every content digest in the
// toolkit (datasets, artifacts, checkpoints, configs) uses this.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, size_t len);
  void update_u32(uint32_t value);  // little-endian
  void update_u64(uint64_t value);  // little-endian
  std::string hex_digest();         // finalizes; call once

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_hex(const std::vector<uint8_t>& bytes);

}  // namespace antilearn

#endif
