#include <gtest/gtest.h>

#include <cstring>

#include "domescan/error.hpp"
#include "domescan/random.hpp"
#include "domescan/tensor.hpp"
#include "domescan/wire.hpp"
#include "test_util.hpp"

using namespace domescan;

namespace {

ErrorCode decode_code(std::vector<std::uint8_t> bytes) {
  try {
    decode_tensors(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Tensor, HeaderLayout) {
  const float v[] = {1.0f, -2.5f};
  std::vector<std::uint8_t> bytes;
  encode_tensor(Tensor::from_floats({2}, v), bytes);
  const std::vector<std::uint8_t> expected = {'L', 'D', 'T', '1', 1, 1, 0, 0, 2, 0, 0, 0,
                                              0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x20, 0xC0};
  EXPECT_EQ(bytes, expected);
}

TEST(Tensor, PayloadSizeFor7x64x512) {
  std::vector<float> values(7 * 64 * 512, 0.25f);
  const auto t = Tensor::from_floats({7, 64, 512}, values);
  EXPECT_EQ(t.payload.size(), 917504u);
  EXPECT_EQ(encoded_size(t), 8u + 12u + 917504u);
}

TEST(Tensor, RoundTripAllDtypes) {
  Rng rng(1);
  std::vector<float> f(3 * 5 * 7);
  for (auto& x : f) {
    const auto bits = static_cast<std::uint32_t>(rng());
    std::memcpy(&x, &bits, 4);  // includes NaN payloads and denormals
  }
  std::vector<std::uint32_t> u(11);
  for (auto& x : u) x = static_cast<std::uint32_t>(rng());
  std::vector<std::uint8_t> b(9);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  const std::vector<Tensor> tensors = {Tensor::from_floats({3, 5, 7}, f), Tensor::from_u32({11}, u),
                                       Tensor::from_u8({3, 3}, b), Tensor::from_u32({}, std::vector<std::uint32_t>{42})};
  testutil::TempDir dir;
  write_tensors(dir.str("t.ldt"), tensors);
  const auto back = read_tensors(dir.str("t.ldt"));
  EXPECT_EQ(back, tensors);
  const auto fb = back[0].floats();
  EXPECT_EQ(std::memcmp(fb.data(), f.data(), f.size() * 4), 0);
  EXPECT_EQ(back[1].u32(), u);
  EXPECT_EQ(back[2].u8(), b);
  EXPECT_THROW(back[2].floats(), Error);
}

TEST(Tensor, DecodeErrors) {
  const std::uint32_t v[] = {1, 2, 3};
  std::vector<std::uint8_t> good;
  encode_tensor(Tensor::from_u32({3}, v), good);

  EXPECT_EQ(decode_code({}), ErrorCode::TruncatedFile);
  auto bad = good;
  bad[3] = '2';
  EXPECT_EQ(decode_code(bad), ErrorCode::BadMagic);
  auto dtype = good;
  dtype[4] = 9;
  EXPECT_EQ(decode_code(dtype), ErrorCode::UnsupportedDtype);
  auto ndim = good;
  ndim[5] = 9;
  EXPECT_EQ(decode_code(ndim), ErrorCode::DimOverflow);
  auto huge = good;
  huge[8] = huge[9] = huge[10] = huge[11] = 0xFF;  // 2^32 - 1 elements of 4 bytes
  EXPECT_EQ(decode_code(huge), ErrorCode::DimOverflow);
  for (std::size_t cut : {std::size_t{2}, std::size_t{6}, std::size_t{10}, good.size() - 1}) {
    EXPECT_EQ(decode_code({good.begin(), good.begin() + static_cast<long>(cut)}), ErrorCode::TruncatedFile) << cut;
  }
  auto trailing = good;
  trailing.push_back('L');
  EXPECT_EQ(decode_code(trailing), ErrorCode::TruncatedFile);
}

TEST(Tensor, FuzzNeverCrashes) {
  Rng rng(2);
  const std::uint32_t v[] = {1, 2, 3, 4};
  std::vector<std::uint8_t> good;
  encode_tensor(Tensor::from_u32({2, 2}, v), good);
  for (int n = 0; n < 20000; ++n) {
    auto bytes = good;
    const auto flips = 1 + uniform_below(rng, 4);
    for (std::uint64_t f = 0; f < flips; ++f) bytes[uniform_below(rng, bytes.size())] ^= static_cast<std::uint8_t>(rng());
    bytes.resize(uniform_below(rng, bytes.size() + 4));
    try {
      decode_tensors(bytes);
    } catch (const Error& e) {
      const auto c = e.code();
      ASSERT_TRUE(c == ErrorCode::BadMagic || c == ErrorCode::TruncatedFile || c == ErrorCode::UnsupportedDtype ||
                  c == ErrorCode::DimOverflow);
    }
  }
}

TEST(Tensor, ReadErrorsNameThePath) {
  testutil::TempDir dir;
  const std::vector<std::uint8_t> bytes = {'L', 'D', 'T', '1', 1, 1, 0, 0, 4, 0, 0, 0, 1, 2};
  write_file_bytes(dir.str("short.ldt"), bytes);
  try {
    read_tensors(dir.str("short.ldt"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedFile);
    EXPECT_EQ(e.subject(), dir.str("short.ldt"));
    EXPECT_NE(std::string(e.what()).find("TruncatedFile"), std::string::npos);
  }
}
