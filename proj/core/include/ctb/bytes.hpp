#pragma once

// Byte containers, fixed-width strong types and the canonical field codec.
//
// Canonical serialization: every field is written as a 4-byte big-endian
// length followed by the field bytes, in declared field order. Integers are
// 8-byte big-endian inside their field. Readers reject short input and
// trailing bytes, so any two distinct values have distinct encodings.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctb {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// UTC seconds.
using Timestamp = std::int64_t;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

std::string to_base64(ByteView data);
Bytes from_base64(std::string_view text);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
  return std::string(b.begin(), b.end());
}

template <std::size_t N, class Tag> struct FixedBytes {
  static constexpr std::size_t size = N;
  std::array<std::uint8_t, N> bytes{};

  static FixedBytes from(ByteView b);
  static FixedBytes from_hex(std::string_view hex) {
    return from(ctb::from_hex(hex));
  }

  bool is_zero() const {
    for (auto v : bytes)
      if (v != 0)
        return false;
    return true;
  }
  std::string hex() const { return to_hex(bytes); }
  ByteView view() const { return bytes; }
  const std::uint8_t *data() const { return bytes.data(); }
  std::uint8_t *data() { return bytes.data(); }

  auto operator<=>(const FixedBytes &) const = default;
  bool operator==(const FixedBytes &) const = default;
};

struct DigestTag {};
struct AddressTag {};
struct NonceTag {};
struct SeedTag {};

/// 32-byte hash output.
using Digest = FixedBytes<32, DigestTag>;
/// 20-byte participant address (truncated public-key hash).
using Address = FixedBytes<20, AddressTag>;
using Nonce = FixedBytes<32, NonceTag>;
/// 32-byte secret seed for deterministic key derivation.
using Seed = FixedBytes<32, SeedTag>;

class ByteWriter {
public:
  ByteWriter &field(ByteView data);
  ByteWriter &str(std::string_view s) { return field(as_bytes(s)); }
  ByteWriter &u64(std::uint64_t v);
  ByteWriter &i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter &u8(std::uint8_t v) { return field(ByteView(&v, 1)); }
  ByteWriter &boolean(bool v) { return u8(v ? 1 : 0); }
  template <std::size_t N, class Tag>
  ByteWriter &fixed(const FixedBytes<N, Tag> &v) {
    return field(v.bytes);
  }

  const Bytes &bytes() const & { return out_; }
  Bytes take() && { return std::move(out_); }

private:
  Bytes out_;
};

class ByteReader {
public:
  explicit ByteReader(ByteView in) : in_(in) {}

  ByteView field();
  std::string str() { return to_string(field()); }
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::uint8_t u8();
  bool boolean();
  template <class T> T fixed() { return T::from(field()); }

  bool at_end() const { return pos_ == in_.size(); }
  void expect_end() const;

private:
  ByteView in_;
  std::size_t pos_ = 0;
};

void put_u32_be(Bytes &out, std::uint32_t v);
std::uint32_t get_u32_be(const std::uint8_t *p);
void put_u64_be(Bytes &out, std::uint64_t v);
std::uint64_t get_u64_be(const std::uint8_t *p);

[[noreturn]] void throw_malformed(const std::string &what);

template <std::size_t N, class Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from(ByteView b) {
  if (b.size() != N)
    throw_malformed("expected " + std::to_string(N) + " bytes, got " +
                    std::to_string(b.size()));
  FixedBytes out;
  std::copy(b.begin(), b.end(), out.bytes.begin());
  return out;
}

} // namespace ctb
