#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>

#include "gen.hpp"
#include "smsrecon/tensor_file.hpp"

using namespace smsrecon;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("smsrecon_tf_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void expect_invalid(const std::vector<std::uint8_t>& bytes) {
  try {
    (void)decode_tensor(bytes);
    FAIL() << "decoded a malformed tensor";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidData);
  }
}

}  // namespace

TEST(TensorFile, ExactByteLayout) {
  TensorFile t{TensorDtype::RealF32, {1, 2}, {1.0f, -2.5f}};
  const std::vector<std::uint8_t> want{'K', 'S', 'T', '1', 1, 1, 2,
                                       1, 0, 0, 0, 0, 0, 0, 0,
                                       2, 0, 0, 0, 0, 0, 0, 0,
                                       0x00, 0x00, 0x80, 0x3f,   // 1.0f
                                       0x00, 0x00, 0x20, 0xc0};  // -2.5f
  EXPECT_EQ(encode_tensor(t), want);
  EXPECT_EQ(decode_tensor(want), t);
}

TEST(TensorFile, RandomRoundTrip) {
  testgen::Rng rng(500);
  for (int i = 0; i < 40; ++i) {
    TensorFile t;
    t.dtype = rng.coin() ? TensorDtype::ComplexF32 : TensorDtype::RealF32;
    const std::size_t rank = rng.index(0, 4);
    for (std::size_t d = 0; d < rank; ++d) t.dims.push_back(rng.index(0, 5));
    const std::size_t n = t.element_count() * (t.dtype == TensorDtype::ComplexF32 ? 2 : 1);
    for (std::size_t k = 0; k < n; ++k) t.values.push_back(static_cast<float>(rng.normal()));
    const auto bytes = encode_tensor(t);
    EXPECT_EQ(bytes.size(), 7 + 8 * rank + 4 * n);
    EXPECT_EQ(decode_tensor(bytes), t) << "seed " << rng.seed() << " case " << i;
  }
}

TEST(TensorFile, RejectsMalformedInput) {
  const auto good = encode_tensor(TensorFile{TensorDtype::ComplexF32, {2, 2}, std::vector<float>(8, 0.5f)});
  auto bad = good;
  bad[0] = 'X';
  expect_invalid(bad);
  bad = good;
  bad[4] = 2;
  expect_invalid(bad);
  bad = good;
  bad[5] = 7;
  expect_invalid(bad);
  bad = good;
  bad.pop_back();
  expect_invalid(bad);
  bad = good;
  bad.push_back(0);
  expect_invalid(bad);
  expect_invalid(std::vector<std::uint8_t>(good.begin(), good.begin() + 10));
  expect_invalid({});
  // dims whose product overflows
  std::vector<std::uint8_t> huge{'K', 'S', 'T', '1', 1, 1, 2};
  for (int d = 0; d < 2; ++d) {
    for (int i = 0; i < 8; ++i) huge.push_back(0xff);
  }
  expect_invalid(huge);
  EXPECT_THROW((void)encode_tensor(TensorFile{TensorDtype::RealF32, {3}, {1.0f}}), Error);
}

TEST(TensorFile, MultiCoilConversion) {
  testgen::Rng rng(501);
  const auto k = testgen::kspace_f32(rng, 3, 4, 5);
  const auto t = to_tensor(k);
  EXPECT_EQ(t.dims, (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(to_multicoil(decode_tensor(encode_tensor(t))), k);
  MultiCoilKSpace big(1, 1, 1);
  big.coil(0)(0, 0) = cplx(1e300, 0.0);
  EXPECT_THROW((void)to_tensor(big), Error);
  EXPECT_THROW((void)to_multicoil(TensorFile{TensorDtype::RealF32, {1, 1, 1}, {1.0f}}), Error);
}

TEST(TensorFile, MagnitudeAndMaskConversion) {
  MagnitudeImage img(2, 3, {0.0, 0.5, 1.0, 1.5, 2.0, 2.5});
  EXPECT_EQ(to_magnitude(to_tensor(img)), img);
  testgen::Rng rng(502);
  const auto mask = testgen::uniform_mask(rng, 4, 12);
  EXPECT_EQ(tensor_to_mask(mask_to_tensor(mask), mask.acs()), mask);
  EXPECT_THROW((void)tensor_to_mask(TensorFile{TensorDtype::RealF32, {1, 2}, {0.0f, 0.5f}}, {}), Error);
}

TEST(TensorFile, AtomicFileIo) {
  const auto dir = scratch_dir("io");
  testgen::Rng rng(503);
  const auto k = testgen::kspace_f32(rng, 2, 3, 3);
  write_tensor(dir / "a.kst", to_tensor(k));
  EXPECT_EQ(to_multicoil(read_tensor(dir / "a.kst")), k);
  write_tensor(dir / "a.kst", to_tensor(MagnitudeImage(1, 1, {4.0})));
  EXPECT_EQ(to_magnitude(read_tensor(dir / "a.kst"))(0, 0), 4.0);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  EXPECT_EQ(entries, 1u);
  write_text_atomic(dir / "t.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "t.txt"), "hello\n");
  try {
    (void)read_tensor(dir / "missing.kst");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
  write_text_atomic(dir / "junk.kst", "junk");
  try {
    (void)read_tensor(dir / "junk.kst");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidData);
    EXPECT_NE(std::string(e.what()).find("junk.kst"), std::string::npos);
  }
  fs::remove_all(dir);
}
