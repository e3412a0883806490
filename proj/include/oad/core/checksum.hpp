#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "oad/core/types.hpp"

namespace oad {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

/// Incremental FNV-1a over the little-endian bytes of fed values. Used for
/// the per-stage artifact digests in run reports.
class Checksum {
 public:
  Checksum& add(double value);
  Checksum& add(std::int64_t value);
  Checksum& add(std::span<const double> values);
  Checksum& add(const Matrix& m);
  Checksum& add(const PointSet& points);
  Checksum& add(std::string_view text);

  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace oad
