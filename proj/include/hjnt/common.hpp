#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hjnt {

enum class ErrorCode {
  Io,
  Parse,
  Validation,
  Usage,
  DimMismatch,
  InventoryMismatch,
  MissingFeature,
  DuplicateId,
  Corrupted,
  Divergence,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InventoryMismatch: return "InventoryMismatch";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::Corrupted: return "Corrupted";
    case ErrorCode::Divergence: return "Divergence";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {
inline void cat_one(std::ostringstream&) {}
template <typename T, typename... Rest>
void cat_one(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  cat_one(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  detail::cat_one(os, args...);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(ErrorCode code, const Args&... args) {
  throw Error(code, cat(args...));
}

template <typename... Args>
void require(bool cond, ErrorCode code, const Args&... args) {
  if (!cond) fail(code, args...);
}

inline std::string lowercase(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

// FNV-1a, used for config provenance hashes and artifact checksums.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[size_t(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace hjnt
