#include "antilearn/digest.hpp"

#include <openssl/evp.h>

#include "antilearn/error.hpp"

namespace antilearn {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
    raise(ErrorCode::Generic, "EVP sha256 init failed");
}

Sha256::~Sha256() {
  if (impl_ && impl_->ctx) EVP_MD_CTX_free(impl_->ctx);
}

void Sha256::update(const void* data, size_t len) {
  if (len == 0) return;
  if (EVP_DigestUpdate(impl_->ctx, data, len) != 1)
    raise(ErrorCode::Generic, "EVP sha256 update failed");
}

void Sha256::update_u32(uint32_t value) {
  uint8_t b[4] = {static_cast<uint8_t>(value), static_cast<uint8_t>(value >> 8),
                  static_cast<uint8_t>(value >> 16), static_cast<uint8_t>(value >> 24)};
  update(b, 4);
}

void Sha256::update_u64(uint64_t value) {
  update_u32(static_cast<uint32_t>(value));
  update_u32(static_cast<uint32_t>(value >> 32));
}

std::string Sha256::hex_digest() {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, md, &len) != 1)
    raise(ErrorCode::Generic, "EVP sha256 final failed");
  static const char* hexd = "0123456789abcdef";
  std::string out(static_cast<size_t>(len) * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hexd[md[i] >> 4];
    out[2 * i + 1] = hexd[md[i] & 0xf];
  }
  return out;
}

std::string sha256_hex(const void* data, size_t len) {
  Sha256 h;
  h.update(data, len);
  return h.hex_digest();
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string sha256_hex(const std::vector<uint8_t>& bytes) {
  return sha256_hex(bytes.data(), bytes.size());
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Generic: return "Generic";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnsupportedNorm: return "UnsupportedNorm";
    case ErrorCode::CorruptArtifact: return "CorruptArtifact";
    case ErrorCode::MetadataMissing: return "MetadataMissing";
    case ErrorCode::MissingArrayEntry: return "MissingArrayEntry";
    case ErrorCode::MultiLabelUnsupported: return "MultiLabelUnsupported";
    case ErrorCode::UnpairedImage: return "UnpairedImage";
    case ErrorCode::NonBinaryMask: return "NonBinaryMask";
    case ErrorCode::IncompatibleDims: return "IncompatibleDims";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::TaskMismatch: return "TaskMismatch";
    case ErrorCode::MismatchedRuns: return "MismatchedRuns";
    case ErrorCode::WeakSurrogate: return "WeakSurrogate";
    case ErrorCode::SegmentationUnsupported: return "SegmentationUnsupported";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return 2;
    case ErrorCode::ChecksumMismatch: return 3;
    case ErrorCode::NonFiniteLoss: return 4;
    case ErrorCode::NoConvergence: return 5;
    default: return 1;
  }
}

}  // namespace antilearn
