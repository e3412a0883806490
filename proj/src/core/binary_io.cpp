#include "oad/core/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>

#include "oad/core/error.hpp"

namespace oad::binio {

namespace {

template <typename Word>
void put_le(std::ostream& out, Word w) {
  std::array<char, sizeof(Word)> bytes{};
  for (std::size_t i = 0; i < sizeof(Word); ++i) bytes[i] = static_cast<char>((w >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

template <typename Word>
Word get_le(std::istream& in) {
  std::array<unsigned char, sizeof(Word)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) fail(ErrorCode::kParse, "unexpected end of binary stream");
  Word w = 0;
  for (std::size_t i = 0; i < sizeof(Word); ++i) w |= static_cast<Word>(bytes[i]) << (8 * i);
  return w;
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), 4); }
void write_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void write_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic.data(), 4) != 0) {
    fail(ErrorCode::kParse, std::string(what) + ": bad magic, expected \"" + std::string(magic) + "\"");
  }
}

std::uint32_t read_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
float read_f32(std::istream& in) { return std::bit_cast<float>(get_le<std::uint32_t>(in)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace oad::binio
