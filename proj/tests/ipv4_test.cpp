#include <gtest/gtest.h>

#include "evc/error.hpp"
#include "evc/ipv4.hpp"

using namespace evc;

TEST(Ipv4Address, RoundTripsDottedQuad) {
  const auto a = Ipv4Address::parse("10.8.254.2");
  EXPECT_EQ(a.value(), (10u << 24) | (8u << 16) | (254u << 8) | 2u);
  EXPECT_EQ(a.to_string(), "10.8.254.2");
  EXPECT_EQ(a.offset(3).to_string(), "10.8.254.5");
}

TEST(Ipv4Address, RejectsMalformedText) {
  for (const char* text : {"", "10.8.0", "10.8.0.256", "10.8.0.1.2", "a.b.c.d", "10..0.1", "10.8.0.-1"}) {
    EXPECT_THROW(Ipv4Address::parse(text), Error) << text;
  }
}

TEST(Ipv4Prefix, ParsesAndMeasures) {
  const auto p = Ipv4Prefix::parse("10.8.0.0/16");
  EXPECT_EQ(p.length(), 16);
  EXPECT_EQ(p.size(), 65536u);
  EXPECT_EQ(p.broadcast().to_string(), "10.8.255.255");
  EXPECT_EQ(p.to_string(), "10.8.0.0/16");
}

TEST(Ipv4Prefix, RejectsHostBitsAndBadLengths) {
  EXPECT_THROW(Ipv4Prefix::parse("10.8.0.1/16"), Error);
  EXPECT_THROW(Ipv4Prefix::parse("10.8.0.0/33"), Error);
  EXPECT_THROW(Ipv4Prefix::parse("10.8.0.0"), Error);
}

TEST(Ipv4Prefix, ContainmentAndOverlap) {
  const auto base = Ipv4Prefix::parse("10.8.0.0/16");
  const auto a = Ipv4Prefix::parse("10.8.1.0/24");
  const auto b = Ipv4Prefix::parse("10.8.0.0/23");
  const auto c = Ipv4Prefix::parse("10.9.0.0/24");
  EXPECT_TRUE(base.contains(a));
  EXPECT_FALSE(a.contains(base));
  EXPECT_TRUE(a.overlaps(b));
  EXPECT_TRUE(b.overlaps(a));
  EXPECT_FALSE(a.overlaps(c));
  EXPECT_TRUE(a.contains(Ipv4Address::parse("10.8.1.77")));
  EXPECT_FALSE(a.contains(Ipv4Address::parse("10.8.2.0")));
}

TEST(Ipv4Prefix, SubblocksAreConsecutive) {
  const auto base = Ipv4Prefix::parse("10.8.0.0/16");
  EXPECT_EQ(base.subblock_count(24), 256u);
  EXPECT_EQ(base.subblock(24, 0).to_string(), "10.8.0.0/24");
  EXPECT_EQ(base.subblock(24, 1).to_string(), "10.8.1.0/24");
  EXPECT_EQ(base.subblock(24, 254).to_string(), "10.8.254.0/24");
  EXPECT_THROW(base.subblock(24, 256), Error);
}

TEST(AddressRange, InclusiveBounds) {
  AddressRange r{Ipv4Address::parse("10.8.0.2"), Ipv4Address::parse("10.8.0.254")};
  EXPECT_TRUE(r.contains(Ipv4Address::parse("10.8.0.2")));
  EXPECT_TRUE(r.contains(Ipv4Address::parse("10.8.0.254")));
  EXPECT_FALSE(r.contains(Ipv4Address::parse("10.8.0.1")));
}
