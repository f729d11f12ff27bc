#ifndef ANTILEARN_ZIPFILE_HPP
#define ANTILEARN_ZIPFILE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace antilearn {

// Minimal zip container used for perturbation artifacts, checkpoints and
// npz archives. Writing always uses the "stored" method with zeroed
// timestamps so equal content produces byte-identical files; reading
// understands stored and deflated entries (enough for numpy's
// savez/savez_compressed output). No zip64.

class ZipWriter {
 public:
  void add(const std::string& name, const void* data, size_t len);
  void add(const std::string& name, const std::string& data);
  void add(const std::string& name, const std::vector<uint8_t>& data);

  std::vector<uint8_t> finish();                 // archive bytes
  void write_file(const std::string& path);      // finish + write to disk

 private:
  struct Entry {
    std::string name;
    uint32_t crc = 0;
    uint32_t size = 0;
    uint32_t offset = 0;
  };
  std::vector<uint8_t> buf_;
  std::vector<Entry> entries_;
  bool finished_ = false;
};

class ZipReader {
 public:
  explicit ZipReader(std::vector<uint8_t> bytes);
  static ZipReader open_file(const std::string& path);

  bool has(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<uint8_t> read(const std::string& name) const;  // CorruptArtifact on damage
  std::string read_string(const std::string& name) const;

 private:
  struct Entry {
    uint16_t method = 0;
    uint32_t crc = 0;
    uint32_t comp_size = 0;
    uint32_t uncomp_size = 0;
    uint32_t local_offset = 0;
  };
  std::vector<uint8_t> bytes_;
  std::vector<std::pair<std::string, Entry>> entries_;  // archive order

  const Entry* find(const std::string& name) const;
};

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace antilearn

#endif
