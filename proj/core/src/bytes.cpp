#include "ctb/bytes.hpp"

#include <chrono>
#include <limits>

#include <sodium.h>

#include "ctb/error.hpp"
#include "ctb/hash.hpp"

namespace ctb {

Timestamp system_now() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

} // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0)
    throw_malformed("odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw_malformed("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

std::string to_base64(ByteView data) {
  ensure_crypto();
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(data.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), variant);
  out.resize(out.size() - 1); // drop terminating NUL
  return out;
}

Bytes from_base64(std::string_view text) {
  ensure_crypto();
  Bytes out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        " \t\r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    throw_malformed("invalid base64 text");
  out.resize(len);
  return out;
}

void put_u32_be(Bytes &out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32_be(const std::uint8_t *p) {
  return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 |
         std::uint32_t{p[2]} << 8 | std::uint32_t{p[3]};
}

void put_u64_be(Bytes &out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint64_t get_u64_be(const std::uint8_t *p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v = v << 8 | p[i];
  return v;
}

void throw_malformed(const std::string &what) {
  throw Error(ErrorCode::Malformed, what);
}

ByteWriter &ByteWriter::field(ByteView data) {
  if (data.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::InvalidArgument, "field exceeds 4 GiB");
  put_u32_be(out_, static_cast<std::uint32_t>(data.size()));
  out_.insert(out_.end(), data.begin(), data.end());
  return *this;
}

ByteWriter &ByteWriter::u64(std::uint64_t v) {
  Bytes tmp;
  put_u64_be(tmp, v);
  return field(tmp);
}

ByteView ByteReader::field() {
  if (in_.size() - pos_ < 4)
    throw_malformed("truncated field length");
  std::uint32_t len = get_u32_be(in_.data() + pos_);
  pos_ += 4;
  if (in_.size() - pos_ < len)
    throw_malformed("truncated field body");
  ByteView out = in_.subspan(pos_, len);
  pos_ += len;
  return out;
}

std::uint64_t ByteReader::u64() {
  auto f = field();
  if (f.size() != 8)
    throw_malformed("integer field must be 8 bytes");
  return get_u64_be(f.data());
}

std::uint8_t ByteReader::u8() {
  auto f = field();
  if (f.size() != 1)
    throw_malformed("byte field must be 1 byte");
  return f[0];
}

bool ByteReader::boolean() {
  auto v = u8();
  if (v > 1)
    throw_malformed("boolean field out of range");
  return v == 1;
}

void ByteReader::expect_end() const {
  if (!at_end())
    throw_malformed("trailing bytes after record");
}

} // namespace ctb
