#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace oad::binio {

// Little-endian primitives for the HM3D / VQCB / TNET containers.

void write_magic(std::ostream& out, std::string_view magic);
void write_u32(std::ostream& out, std::uint32_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);

/// Throws kParse when the next four bytes are not `magic`.
void expect_magic(std::istream& in, std::string_view magic, std::string_view what);
std::uint32_t read_u32(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);

}  // namespace oad::binio
