#include "antilearn/zipfile.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "antilearn/error.hpp"

namespace antilearn {

namespace {

constexpr uint32_t kLocalSig = 0x04034b50;
constexpr uint32_t kCentralSig = 0x02014b50;
constexpr uint32_t kEndSig = 0x06054b50;
constexpr uint16_t kDosDate1980 = 0x0021;  // 1980-01-01, fixed for determinism

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  put_u16(b, static_cast<uint16_t>(v));
  put_u16(b, static_cast<uint16_t>(v >> 16));
}

uint16_t get_u16(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint16_t>(b[off] | (b[off + 1] << 8));
}
uint32_t get_u32(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) | (static_cast<uint32_t>(b[off + 3]) << 24);
}

std::vector<uint8_t> inflate_raw(const uint8_t* src, size_t src_len, size_t dst_len) {
  std::vector<uint8_t> out(dst_len);
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
    raise(ErrorCode::Generic, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(src);
  zs.avail_in = static_cast<uInt>(src_len);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(dst_len);
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != dst_len)
    raise(ErrorCode::CorruptArtifact, "deflated zip entry did not decompress cleanly");
  return out;
}

}  // namespace

void ZipWriter::add(const std::string& name, const void* data, size_t len) {
  require(!finished_, ErrorCode::Generic, "ZipWriter already finished");
  require(len <= 0xfffffffeULL, ErrorCode::Generic, "zip64 not supported");
  Entry e;
  e.name = name;
  e.size = static_cast<uint32_t>(len);
  e.crc = static_cast<uint32_t>(crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
  e.offset = static_cast<uint32_t>(buf_.size());

  put_u32(buf_, kLocalSig);
  put_u16(buf_, 20);            // version needed
  put_u16(buf_, 0);             // flags
  put_u16(buf_, 0);             // method: stored
  put_u16(buf_, 0);             // mod time
  put_u16(buf_, kDosDate1980);  // mod date
  put_u32(buf_, e.crc);
  put_u32(buf_, e.size);        // compressed
  put_u32(buf_, e.size);        // uncompressed
  put_u16(buf_, static_cast<uint16_t>(name.size()));
  put_u16(buf_, 0);             // extra len
  buf_.insert(buf_.end(), name.begin(), name.end());
  const uint8_t* p = static_cast<const uint8_t*>(data);
  buf_.insert(buf_.end(), p, p + len);
  entries_.push_back(std::move(e));
}

void ZipWriter::add(const std::string& name, const std::string& data) {
  add(name, data.data(), data.size());
}
void ZipWriter::add(const std::string& name, const std::vector<uint8_t>& data) {
  add(name, data.data(), data.size());
}

std::vector<uint8_t> ZipWriter::finish() {
  require(!finished_, ErrorCode::Generic, "ZipWriter already finished");
  finished_ = true;
  uint32_t cd_offset = static_cast<uint32_t>(buf_.size());
  for (const Entry& e : entries_) {
    put_u32(buf_, kCentralSig);
    put_u16(buf_, 20);  // version made by
    put_u16(buf_, 20);  // version needed
    put_u16(buf_, 0);
    put_u16(buf_, 0);   // method stored
    put_u16(buf_, 0);
    put_u16(buf_, kDosDate1980);
    put_u32(buf_, e.crc);
    put_u32(buf_, e.size);
    put_u32(buf_, e.size);
    put_u16(buf_, static_cast<uint16_t>(e.name.size()));
    put_u16(buf_, 0);  // extra
    put_u16(buf_, 0);  // comment
    put_u16(buf_, 0);  // disk
    put_u16(buf_, 0);  // internal attrs
    put_u32(buf_, 0);  // external attrs
    put_u32(buf_, e.offset);
    buf_.insert(buf_.end(), e.name.begin(), e.name.end());
  }
  uint32_t cd_size = static_cast<uint32_t>(buf_.size()) - cd_offset;
  put_u32(buf_, kEndSig);
  put_u16(buf_, 0);
  put_u16(buf_, 0);
  put_u16(buf_, static_cast<uint16_t>(entries_.size()));
  put_u16(buf_, static_cast<uint16_t>(entries_.size()));
  put_u32(buf_, cd_size);
  put_u32(buf_, cd_offset);
  put_u16(buf_, 0);  // comment len
  return std::move(buf_);
}

void ZipWriter::write_file(const std::string& path) { write_file_bytes(path, finish()); }

ZipReader::ZipReader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < 22) raise(ErrorCode::CorruptArtifact, "file too small for a zip archive");
  // Find EOCD, scanning back over a possible comment.
  size_t scan_floor = bytes_.size() >= 22 + 65536 ? bytes_.size() - 22 - 65536 : 0;
  size_t eocd = SIZE_MAX;
  for (size_t i = bytes_.size() - 22 + 1; i-- > scan_floor;) {
    if (get_u32(bytes_, i) == kEndSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == SIZE_MAX) raise(ErrorCode::CorruptArtifact, "zip end record not found");
  uint16_t count = get_u16(bytes_, eocd + 10);
  uint32_t cd_size = get_u32(bytes_, eocd + 12);
  uint32_t cd_offset = get_u32(bytes_, eocd + 16);
  if (static_cast<size_t>(cd_offset) + cd_size > bytes_.size())
    raise(ErrorCode::CorruptArtifact, "zip central directory out of range");

  size_t pos = cd_offset;
  for (uint16_t k = 0; k < count; ++k) {
    if (pos + 46 > bytes_.size() || get_u32(bytes_, pos) != kCentralSig)
      raise(ErrorCode::CorruptArtifact, "bad central directory entry");
    Entry e;
    e.method = get_u16(bytes_, pos + 10);
    e.crc = get_u32(bytes_, pos + 16);
    e.comp_size = get_u32(bytes_, pos + 20);
    e.uncomp_size = get_u32(bytes_, pos + 24);
    uint16_t name_len = get_u16(bytes_, pos + 28);
    uint16_t extra_len = get_u16(bytes_, pos + 30);
    uint16_t comment_len = get_u16(bytes_, pos + 32);
    e.local_offset = get_u32(bytes_, pos + 42);
    if (pos + 46 + name_len > bytes_.size())
      raise(ErrorCode::CorruptArtifact, "truncated central directory");
    std::string name(reinterpret_cast<const char*>(bytes_.data() + pos + 46), name_len);
    entries_.emplace_back(std::move(name), e);
    pos += 46 + static_cast<size_t>(name_len) + extra_len + comment_len;
  }
}

ZipReader ZipReader::open_file(const std::string& path) {
  return ZipReader(read_file_bytes(path));
}

const ZipReader::Entry* ZipReader::find(const std::string& name) const {
  for (const auto& [n, e] : entries_)
    if (n == name) return &e;
  return nullptr;
}

bool ZipReader::has(const std::string& name) const { return find(name) != nullptr; }

std::vector<std::string> ZipReader::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [n, e] : entries_) out.push_back(n);
  return out;
}

std::vector<uint8_t> ZipReader::read(const std::string& name) const {
  const Entry* e = find(name);
  if (!e) raise(ErrorCode::MissingArrayEntry, "zip entry not found: " + name);
  size_t pos = e->local_offset;
  if (pos + 30 > bytes_.size() || get_u32(bytes_, pos) != kLocalSig)
    raise(ErrorCode::CorruptArtifact, "bad local header for " + name);
  uint16_t name_len = get_u16(bytes_, pos + 26);
  uint16_t extra_len = get_u16(bytes_, pos + 28);
  size_t data_pos = pos + 30 + name_len + extra_len;
  if (data_pos + e->comp_size > bytes_.size())
    raise(ErrorCode::CorruptArtifact, "truncated data for " + name);

  std::vector<uint8_t> out;
  if (e->method == 0) {
    if (e->comp_size != e->uncomp_size)
      raise(ErrorCode::CorruptArtifact, "stored entry with mismatched sizes");
    out.assign(bytes_.begin() + data_pos, bytes_.begin() + data_pos + e->comp_size);
  } else if (e->method == 8) {
    out = inflate_raw(bytes_.data() + data_pos, e->comp_size, e->uncomp_size);
  } else {
    raise(ErrorCode::CorruptArtifact, "unsupported zip method for " + name);
  }
  uint32_t crc = static_cast<uint32_t>(crc32(0L, out.data(), static_cast<uInt>(out.size())));
  if (crc != e->crc) raise(ErrorCode::CorruptArtifact, "crc mismatch for " + name);
  return out;
}

std::string ZipReader::read_string(const std::string& name) const {
  auto b = read(name);
  return std::string(b.begin(), b.end());
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + path);
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) raise(ErrorCode::IoFailure, "read failed: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed: " + path);
}

}  // namespace antilearn
