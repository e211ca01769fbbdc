#include "forge/hash.hpp"

#include <cstdio>

namespace forge {

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void lanes_update(std::uint64_t& a, std::uint64_t& b, std::string_view bytes) {
  for (unsigned char c : bytes) {
    a = (a ^ c) * kFnvPrime;
    b = (b ^ (c + 0x9e)) * kFnvPrime;
  }
}

}  // namespace

Hash128 hash128(std::string_view bytes) {
  Hash128Stream s;
  s.update(bytes);
  return s.digest();
}

void Hash128Stream::update(std::string_view bytes) { lanes_update(a_, b_, bytes); }

Hash128 Hash128Stream::digest() const {
  return Hash128{mix64(a_), mix64(b_ ^ mix64(a_))};
}

std::string to_hex(const Hash128& h) {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(h.hi),
                static_cast<unsigned long long>(h.lo));
  return std::string(buf, 32);
}

}  // namespace forge
