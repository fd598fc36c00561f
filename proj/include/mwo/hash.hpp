#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace mwo {

// 64-bit FNV-1a, incremental. Used for content fingerprints, not security.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 1099511628211ULL;
    }
    return *this;
  }
  Fnv1a& update(unsigned char c) {
    h_ ^= c;
    h_ *= 1099511628211ULL;
    return *this;
  }
  std::uint64_t value() const { return h_; }

  // "<count>:<16 hex digits>"
  std::string fingerprint(std::size_t count) const {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%zu:%016llx", count, static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

}  // namespace mwo
