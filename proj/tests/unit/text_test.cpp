// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "synqa/hash.hpp"
#include "synqa/text.hpp"

using namespace synqa;

TEST(Utf8, DecodeEncodeRoundTrip) {
  const std::string s = "Żelazowa Wola — café 日本 😀";
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
  EXPECT_EQ(text::length(s), 25u);
}

TEST(Utf8, MalformedBytesBecomeReplacement) {
  const std::string bad = "a\xC3";  // truncated two-byte sequence
  const auto cps = text::decode_utf8(bad);
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_EQ(cps[1], U'�');
}

TEST(Utf8, SliceUsesCodePoints) {
  const std::string s = "Frédéric Chopin";
  EXPECT_EQ(text::slice(s, 0, 8), "Frédéric");
  EXPECT_EQ(text::slice(s, 9, 15), "Chopin");
  EXPECT_THROW(text::slice(s, 3, 99), std::out_of_range);
}

TEST(Utf8, FindReturnsCodePointIndex) {
  EXPECT_EQ(text::find_codepoint("é é Chopin", "Chopin"), 4u);
  EXPECT_EQ(text::find_codepoint("abc", "x"), std::string::npos);
}

TEST(Utf8, PythonWhitespaceSplit) {
  const auto parts = text::split_whitespace("a b  c\n");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[2], "c");
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Sha256, LeadingWordIsBigEndian) {
  // digest of "annotator-0001" computed with Python hashlib
  EXPECT_EQ(sha256_hex("annotator-0001"),
            "17916d2b48fd40b6bf633fc14f0b4c12494c3750ddd00c7d28987a39a68c3141");
  EXPECT_EQ(leading_u64(sha256("annotator-0001")), 0x17916d2b48fd40b6ULL);
}
