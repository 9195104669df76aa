#include "evc/ipv4.hpp"

#include <charconv>

#include "evc/error.hpp"

namespace evc {

namespace {

std::uint32_t mask_for(int length) {
  return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

}  // namespace

Ipv4Address Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* cursor = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (cursor == end || *cursor != '.') {
        throw Error(ErrorCode::ParseError, "malformed IPv4 address '" + std::string(text) + "'");
      }
      ++cursor;
    }
    unsigned part = 0;
    auto [next, ec] = std::from_chars(cursor, end, part);
    if (ec != std::errc{} || part > 255 || next == cursor) {
      throw Error(ErrorCode::ParseError, "malformed IPv4 address '" + std::string(text) + "'");
    }
    value = (value << 8) | part;
    cursor = next;
  }
  if (cursor != end) {
    throw Error(ErrorCode::ParseError, "trailing characters in IPv4 address '" + std::string(text) + "'");
  }
  return Ipv4Address{value};
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
         std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

Ipv4Prefix::Ipv4Prefix(Ipv4Address network, int length) : length_(length) {
  if (length < 0 || length > 32) {
    throw Error(ErrorCode::InvalidValue, "prefix length out of range: " + std::to_string(length));
  }
  network_ = Ipv4Address{network.value() & mask_for(length)};
}

Ipv4Prefix Ipv4Prefix::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorCode::ParseError, "prefix without length '" + std::string(text) + "'");
  }
  auto address = Ipv4Address::parse(text.substr(0, slash));
  auto length_text = text.substr(slash + 1);
  int length = -1;
  auto [next, ec] = std::from_chars(length_text.data(), length_text.data() + length_text.size(), length);
  if (ec != std::errc{} || next != length_text.data() + length_text.size() || length < 0 || length > 32) {
    throw Error(ErrorCode::ParseError, "bad prefix length in '" + std::string(text) + "'");
  }
  if ((address.value() & ~mask_for(length)) != 0) {
    throw Error(ErrorCode::ParseError, "host bits set in prefix '" + std::string(text) + "'");
  }
  return Ipv4Prefix{address, length};
}

Ipv4Address Ipv4Prefix::broadcast() const {
  return Ipv4Address{network_.value() | ~mask_for(length_)};
}

bool Ipv4Prefix::contains(Ipv4Address address) const {
  return (address.value() & mask_for(length_)) == network_.value();
}

bool Ipv4Prefix::contains(const Ipv4Prefix& other) const {
  return other.length_ >= length_ && contains(other.network_);
}

bool Ipv4Prefix::overlaps(const Ipv4Prefix& other) const {
  return contains(other) || other.contains(*this);
}

std::uint64_t Ipv4Prefix::subblock_count(int sub_length) const {
  if (sub_length < length_ || sub_length > 32) {
    return 0;
  }
  return std::uint64_t{1} << (sub_length - length_);
}

Ipv4Prefix Ipv4Prefix::subblock(int sub_length, std::uint64_t index) const {
  if (index >= subblock_count(sub_length)) {
    throw Error(ErrorCode::PrefixExhausted,
                "sub-block " + std::to_string(index) + " of /" + std::to_string(sub_length) + " outside " + to_string());
  }
  auto step = std::uint64_t{1} << (32 - sub_length);
  return Ipv4Prefix{Ipv4Address{static_cast<std::uint32_t>(network_.value() + index * step)}, sub_length};
}

std::string Ipv4Prefix::to_string() const {
  return network_.to_string() + '/' + std::to_string(length_);
}

}  // namespace evc
