#include "oad/core/checksum.hpp"

#include <bit>
#include <cstdio>

namespace oad {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

namespace {

std::uint64_t mix_word(std::uint64_t state, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    state ^= (word >> (8 * i)) & 0xffU;
    state *= 0x100000001b3ULL;
  }
  return state;
}

}  // namespace

Checksum& Checksum::add(double value) {
  // Fold -0.0 into 0.0 so digests depend on values, not on sign-of-zero noise.
  if (value == 0.0) value = 0.0;
  state_ = mix_word(state_, std::bit_cast<std::uint64_t>(value));
  return *this;
}

Checksum& Checksum::add(std::int64_t value) {
  state_ = mix_word(state_, static_cast<std::uint64_t>(value));
  return *this;
}

Checksum& Checksum::add(std::span<const double> values) {
  for (double v : values) add(v);
  return *this;
}

Checksum& Checksum::add(const Matrix& m) {
  add(static_cast<std::int64_t>(m.rows()));
  add(static_cast<std::int64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) add(m(r, c));
  return *this;
}

Checksum& Checksum::add(const PointSet& points) {
  add(static_cast<std::int64_t>(points.size()));
  for (const auto& p : points) add(p.x()).add(p.y()).add(p.z());
  return *this;
}

Checksum& Checksum::add(std::string_view text) {
  state_ = fnv1a64(text, state_);
  return *this;
}

std::string Checksum::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

}  // namespace oad
