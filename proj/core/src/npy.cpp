#include "antilearn/npy.hpp"

#include <cstring>

#include "antilearn/error.hpp"

namespace antilearn {

namespace {

const char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string dict_value(const std::string& header, const std::string& key) {
  size_t k = header.find("'" + key + "'");
  if (k == std::string::npos) raise(ErrorCode::CorruptArtifact, "npy header missing " + key);
  size_t colon = header.find(':', k);
  if (colon == std::string::npos) raise(ErrorCode::CorruptArtifact, "malformed npy header");
  size_t end = colon + 1;
  int depth = 0;
  while (end < header.size()) {
    char c = header[end];
    if (c == '(') depth++;
    if (c == ')') depth--;
    if (depth == 0 && (c == ',' || c == '}')) break;
    ++end;
  }
  std::string v = header.substr(colon + 1, end - colon - 1);
  size_t a = v.find_first_not_of(" \t");
  size_t b = v.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return v.substr(a, b - a + 1);
}

std::vector<size_t> parse_shape(const std::string& tup) {
  std::vector<size_t> shape;
  std::string digits;
  for (char c : tup) {
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
    } else if (!digits.empty()) {
      shape.push_back(static_cast<size_t>(std::stoull(digits)));
      digits.clear();
    }
  }
  if (!digits.empty()) shape.push_back(static_cast<size_t>(std::stoull(digits)));
  return shape;
}

std::vector<uint8_t> serialize(const std::string& descr, size_t item,
                               const std::vector<size_t>& shape, const void* data) {
  std::string shp = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    shp += std::to_string(shape[i]);
    if (i + 1 < shape.size() || shape.size() == 1) shp += ", ";
  }
  shp += ")";
  std::string header =
      "{'descr': '" + descr + "', 'fortran_order': False, 'shape': " + shp + ", }";
  size_t unpadded = 6 + 2 + 2 + header.size() + 1;
  size_t padded = (unpadded + 63) / 64 * 64;
  header.append(padded - unpadded, ' ');
  header.push_back('\n');

  size_t count = 1;
  for (size_t d : shape) count *= d;
  std::vector<uint8_t> out;
  out.reserve(padded + count * item);
  out.insert(out.end(), kMagic, kMagic + 6);
  out.push_back(1);
  out.push_back(0);
  uint16_t hlen = static_cast<uint16_t>(header.size());
  out.push_back(static_cast<uint8_t>(hlen));
  out.push_back(static_cast<uint8_t>(hlen >> 8));
  out.insert(out.end(), header.begin(), header.end());
  const uint8_t* p = static_cast<const uint8_t*>(data);
  out.insert(out.end(), p, p + count * item);
  return out;
}

}  // namespace

NpyArray npy_parse(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0)
    raise(ErrorCode::CorruptArtifact, "not an npy array");
  uint8_t major = bytes[6];
  size_t header_len = 0, header_off = 0;
  if (major == 1) {
    header_len = bytes[8] | (bytes[9] << 8);
    header_off = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) raise(ErrorCode::CorruptArtifact, "truncated npy header");
    header_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) |
                 (static_cast<size_t>(bytes[11]) << 24);
    header_off = 12;
  } else {
    raise(ErrorCode::CorruptArtifact, "unsupported npy version");
  }
  if (header_off + header_len > bytes.size())
    raise(ErrorCode::CorruptArtifact, "truncated npy header");
  std::string header(reinterpret_cast<const char*>(bytes.data() + header_off), header_len);

  NpyArray arr;
  std::string descr = dict_value(header, "descr");
  if (descr == "'|u1'" || descr == "'u1'" || descr == "'<u1'") {
    arr.dtype = NpyArray::Dtype::u8;
  } else if (descr == "'<f4'") {
    arr.dtype = NpyArray::Dtype::f32;
  } else {
    raise(ErrorCode::CorruptArtifact, "unsupported npy dtype " + descr);
  }
  std::string order = dict_value(header, "fortran_order");
  if (order != "False")
    raise(ErrorCode::CorruptArtifact, "fortran-order npy arrays are not supported");
  arr.shape = parse_shape(dict_value(header, "shape"));

  size_t item = arr.dtype == NpyArray::Dtype::u8 ? 1 : 4;
  size_t want = arr.elem_count() * item;
  size_t data_off = header_off + header_len;
  if (data_off + want > bytes.size()) raise(ErrorCode::CorruptArtifact, "truncated npy payload");
  arr.raw.assign(bytes.begin() + data_off, bytes.begin() + data_off + want);
  return arr;
}

std::vector<uint8_t> npy_serialize_u8(const std::vector<size_t>& shape, const uint8_t* data) {
  return serialize("|u1", 1, shape, data);
}

std::vector<uint8_t> npy_serialize_f32(const std::vector<size_t>& shape, const float* data) {
  return serialize("<f4", 4, shape, data);
}

}  // namespace antilearn
