#pragma once

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hjnt/common.hpp"

namespace hjnt {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Line-oriented reader over plain or gzip files (picked by ".gz" extension).
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path) {
    if (ends_with(path, ".gz")) {
      gz_ = gzopen(path.c_str(), "rb");
      require(gz_ != nullptr, ErrorCode::Io, "cannot open ", path);
    } else {
      in_.open(path);
      require(in_.is_open(), ErrorCode::Io, "cannot open ", path);
    }
  }

  ~LineReader() {
    if (gz_) gzclose(gz_);
  }

  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // Returns false at end of input. Strips trailing '\r' and '\n'.
  bool next(std::string& line) {
    if (gz_) {
      line.clear();
      char buf[4096];
      bool got = false;
      while (true) {
        if (gzgets(gz_, buf, sizeof(buf)) == nullptr) return got && !line.empty() ? true : got;
        got = true;
        line += buf;
        if (!line.empty() && line.back() == '\n') break;
      }
      trim_eol(line);
      return true;
    }
    if (!std::getline(in_, line)) return false;
    trim_eol(line);
    return true;
  }

  const std::string& path() const { return path_; }

 private:
  static void trim_eol(std::string& s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  }

  std::string path_;
  std::ifstream in_;
  gzFile gz_ = nullptr;
};

inline void write_gz_file(const std::string& path, const std::string& content) {
  gzFile f = gzopen(path.c_str(), "wb");
  require(f != nullptr, ErrorCode::Io, "cannot open ", path, " for writing");
  int written = gzwrite(f, content.data(), unsigned(content.size()));
  gzclose(f);
  require(size_t(written) == content.size(), ErrorCode::Io, "short gzip write to ", path);
}

inline bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), ErrorCode::Io, "cannot open ", path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.is_open(), ErrorCode::Io, "cannot open ", path, " for writing");
  out << content;
  require(bool(out), ErrorCode::Io, "write failed: ", path);
}

inline uint64_t file_checksum(const std::string& path) { return fnv1a(read_file(path)); }

}  // namespace hjnt
