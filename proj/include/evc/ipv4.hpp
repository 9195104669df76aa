#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace evc {

class Ipv4Address {
 public:
  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t value) : value_(value) {}

  /// Parses dotted-quad notation; throws evc::Error(ParseError) on malformed input.
  static Ipv4Address parse(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  std::string to_string() const;

  constexpr Ipv4Address offset(std::uint32_t delta) const { return Ipv4Address{value_ + delta}; }

  constexpr auto operator<=>(const Ipv4Address&) const = default;

 private:
  std::uint32_t value_ = 0;
};

/// A CIDR block. The network address is always normalised (host bits cleared).
class Ipv4Prefix {
 public:
  constexpr Ipv4Prefix() = default;
  Ipv4Prefix(Ipv4Address network, int length);

  static Ipv4Prefix parse(std::string_view text);

  Ipv4Address network() const { return network_; }
  int length() const { return length_; }
  std::uint64_t size() const { return std::uint64_t{1} << (32 - length_); }
  Ipv4Address broadcast() const;

  bool contains(Ipv4Address address) const;
  bool contains(const Ipv4Prefix& other) const;
  bool overlaps(const Ipv4Prefix& other) const;

  /// Number of equal sub-blocks of the given length.
  std::uint64_t subblock_count(int sub_length) const;
  /// The index-th sub-block of the given length, counting from the network address.
  Ipv4Prefix subblock(int sub_length, std::uint64_t index) const;

  std::string to_string() const;

  auto operator<=>(const Ipv4Prefix&) const = default;

 private:
  Ipv4Address network_;
  int length_ = 0;
};

/// Inclusive address interval.
struct AddressRange {
  Ipv4Address first;
  Ipv4Address last;

  bool contains(Ipv4Address address) const { return first <= address && address <= last; }
  bool operator==(const AddressRange&) const = default;
};

}  // namespace evc
