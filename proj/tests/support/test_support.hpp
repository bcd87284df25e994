#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pseudolabel/corpus.hpp"
#include "pseudolabel/hashing.hpp"

namespace pseudolabel::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "pl") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Random text biased towards the interesting cases: every kind of Unicode
// whitespace, URL prefixes in mixed case, multi-byte letters, and the odd
// invalid byte when allow_invalid is set.
inline std::string random_unicode(Rng& rng, std::size_t max_pieces, bool allow_invalid = false) {
  static const std::vector<char32_t> spaces = {0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x20, 0x85,
                                               0xA0, 0x1680, 0x2000, 0x2005, 0x200A, 0x2028,
                                               0x2029, 0x202F, 0x205F, 0x3000};
  static const std::vector<std::string> fragments = {
      "http://", "HTTPS://", "www.", "Www.", "httpurl", "a.b/c?d=1", "ok", "Ünïcödé",
      "Привет", "ΣΊΣΥΦΟΣ", "日本語", "😀", "sad", "I", "\"quoted\"", ",", "http:/", "ww."};
  std::string out;
  const std::uint64_t pieces = rng.below(max_pieces + 1);
  for (std::uint64_t i = 0; i < pieces; ++i) {
    switch (rng.below(allow_invalid ? 5 : 4)) {
      case 0: append_utf8(out, spaces[rng.below(spaces.size())]); break;
      case 1: out += fragments[rng.below(fragments.size())]; break;
      case 2: {
        char32_t cp = static_cast<char32_t>(rng.below(0x10FFFF));
        if (cp >= 0xD800 && cp <= 0xDFFF) cp = 'x';
        append_utf8(out, cp);
        break;
      }
      case 3: out.push_back(static_cast<char>('a' + rng.below(26))); break;
      default: out.push_back(static_cast<char>(0x80 + rng.below(0x80))); break;
    }
  }
  return out;
}

inline Post labeled_post(std::string id, std::string text, SeverityLabel label) {
  Post p;
  p.id = std::move(id);
  p.text = std::move(text);
  p.label = label;
  return p;
}

}  // namespace pseudolabel::testing
