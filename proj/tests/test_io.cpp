#include "statsvd/tns_io.hpp"

#include "statsvd/serialize.hpp"
#include "statsvd/simbench.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

using namespace statsvd;
using testing_support::Draw;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("statsvd_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

TEST(Tns, ExplicitLayout) {
  Tensor t(Shape{2, 3});
  t.data() << 1.0, 2.0, 3.0, 4.0, 5.0, -0.5;
  std::string expect = "TNS1";
  put_u32(expect, 2);
  put_u64(expect, 2);
  put_u64(expect, 3);
  for (Index i = 0; i < 6; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &t.data()[i], 8);
    put_u64(expect, bits);
  }
  EXPECT_EQ(encode_tns(t), expect);
  EXPECT_EQ(decode_tns(expect), t);
}

TEST(Tns, FileRoundTripIsByteIdentical) {
  Draw draw(71);
  const auto dir = scratch_dir("tns");
  for (int trial = 0; trial < 20; ++trial) {
    const int order = static_cast<int>(draw.integer(2, 4));
    const Tensor t = draw.tensor(draw.shape(order, 6));
    write_tns(dir / "a.tns", t);
    const Tensor back = read_tns(dir / "a.tns");
    EXPECT_EQ(back, t);
    write_tns(dir / "b.tns", back);
    EXPECT_EQ(read_file(dir / "a.tns"), read_file(dir / "b.tns"));
  }
}

TEST(Tns, MalformedInputsRejected) {
  Tensor t(Shape{2, 2});
  const std::string good = encode_tns(t);
  EXPECT_THROW(decode_tns(""), DataError);
  EXPECT_THROW(decode_tns("TNS2" + good.substr(4)), DataError);
  EXPECT_THROW(decode_tns(good.substr(0, good.size() - 1)), DataError);
  EXPECT_THROW(decode_tns(good + "x"), DataError);
  std::string order1 = "TNS1";
  put_u32(order1, 1);
  put_u64(order1, 1);
  put_u64(order1, 0);
  EXPECT_THROW(decode_tns(order1), DataError);
  std::string zero_dim = "TNS1";
  put_u32(zero_dim, 2);
  put_u64(zero_dim, 0);
  put_u64(zero_dim, 3);
  EXPECT_THROW(decode_tns(zero_dim), DataError);
  std::string huge = "TNS1";
  put_u32(huge, 2);
  put_u64(huge, 1ULL << 40);
  put_u64(huge, 1ULL << 40);
  EXPECT_THROW(decode_tns(huge), DataError);
  std::string nan_value = good;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan_value.data() + nan_value.size() - 8, &nan, 8);
  EXPECT_THROW(decode_tns(nan_value), DataError);
  EXPECT_THROW(read_tns("/nonexistent/statsvd.tns"), DataError);
}

TEST(LongCsv, RoundTripValueIdentical) {
  Draw draw(72);
  LongTable table{{"age", "year", "country"}, "rate", draw.tensor({4, 3, 2})};
  table.tensor.data()[5] = 1e-300;
  table.tensor.data()[6] = -123456.789;
  const std::string text = format_long_csv(table);
  const LongTable back = parse_long_csv(text);
  EXPECT_EQ(back.mode_names, table.mode_names);
  EXPECT_EQ(back.value_name, "rate");
  EXPECT_EQ(back.tensor, table.tensor);
  EXPECT_EQ(format_long_csv(back), text);
}

TEST(LongCsv, AcceptsAnyRowOrder) {
  const LongTable t = parse_long_csv("i,j,value\n1,1,4\n0,0,1\n1,0,3\n0,1,2\n");
  EXPECT_EQ(t.tensor.shape(), (Shape{2, 2}));
  EXPECT_EQ(t.tensor({0, 0}), 1.0);
  EXPECT_EQ(t.tensor({0, 1}), 2.0);
  EXPECT_EQ(t.tensor({1, 0}), 3.0);
  EXPECT_EQ(t.tensor({1, 1}), 4.0);
}

TEST(LongCsv, MalformedInputsRejected) {
  EXPECT_THROW(parse_long_csv(""), DataError);
  EXPECT_THROW(parse_long_csv("i,value\n0,1\n"), DataError);                        // order 1
  EXPECT_THROW(parse_long_csv("i,j,value\n0,0,1\n0,1,2\n1,0,3\n"), DataError);      // missing entry
  EXPECT_THROW(parse_long_csv("i,j,value\n0,0,1\n0,0,2\n1,0,3\n1,1,4\n"), DataError);  // duplicate
  EXPECT_THROW(parse_long_csv("i,j,value\n0,0,1\n0,1\n1,0,3\n1,1,4\n"), DataError);     // short row
  EXPECT_THROW(parse_long_csv("i,j,value\n0,0,x\n0,1,2\n1,0,3\n1,1,4\n"), DataError);   // bad value
  EXPECT_THROW(parse_long_csv("i,j,value\n-1,0,1\n0,1,2\n1,0,3\n1,1,4\n"), DataError);  // negative index
  EXPECT_THROW(parse_long_csv("i,j,value\n0,0,nan\n0,1,2\n1,0,3\n1,1,4\n"), DataError); // non-finite
}

TEST(Files, DispatchAndAtomicWrite) {
  const auto dir = scratch_dir("files");
  Tensor t(Shape{2, 2});
  t.data() << 1.0, 2.0, 3.0, 4.0;
  write_tns(dir / "t.tns", t);
  write_file_atomic(dir / "nested" / "t.csv", "a,b,value\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n");
  EXPECT_EQ(read_tensor_file(dir / "t.tns"), t);
  EXPECT_EQ(read_tensor_file(dir / "nested" / "t.csv"), t);
  EXPECT_FALSE(std::filesystem::exists(dir / "nested" / "t.csv.tmp"));
}

TEST(FitJson, RoundTrip) {
  SimParams sp{{12, 10, 8}, {2, 2, 2}, {4, 10, 8}, 30.0, 1.0, NoiseFamily::kGaussian, {0}};
  const auto inst = gen_instance(sp, 3);
  const auto res = fit(inst.y, StatSvdConfig{{2, 2, 2}, 1.0, {0}});
  const auto j = fit_to_json(res);
  const auto back = fit_from_json(nlohmann::json::parse(j.dump()));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.loadings[k], res.loadings[k]);
    EXPECT_EQ(back.supports[k].first, res.supports[k].first);
    EXPECT_EQ(back.supports[k].second, res.supports[k].second);
    EXPECT_EQ(back.initial_supports[k], res.initial_supports[k]);
  }
  EXPECT_EQ(back.core, res.core);
  EXPECT_EQ(back.trace, res.trace);
  EXPECT_EQ(back.iterations_run, res.iterations_run);
  EXPECT_EQ(back.converged, res.converged);
  EXPECT_EQ(back.t_max, res.t_max);
  EXPECT_EQ(back.eps_tol, res.eps_tol);
  EXPECT_LE((back.denoised - res.denoised).norm(), 1e-12 * res.denoised.norm());
  EXPECT_THROW(frame_from_json(nlohmann::json::parse(R"({"rows":2,"cols":1,"data":[1,1]})")), std::invalid_argument);
}
