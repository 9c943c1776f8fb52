#include "nvgate/config.hpp"

#include <gtest/gtest.h>

using namespace nvgate;

namespace {

KeyValueConfig parse(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in);
}

std::string base() {
  return "level.e1_ghz = 3.9\nlevel.e2_ghz = 3.9\nlevel.e3_ghz = 0\nlevel.e4_ghz = 0\n"
         "level.e5_ghz = -5.1\nlevel.e6_ghz = -8.2\n";
}

}  // namespace

TEST(Config, DefaultFileLoads) {
  const PhysicsConfig c = load_physics();
  EXPECT_DOUBLE_EQ(c.f.f11, 0.0513);
  EXPECT_NEAR(c.gamma_nr_mhz(), 44.9, 0.1);
  EXPECT_TRUE(c.levels.pairs_degenerate());
}

TEST(Config, CommentsAndWhitespace) {
  const KeyValueConfig kv = parse("# header\n  a = 1.5 # trailing\n\nb=2\n");
  EXPECT_DOUBLE_EQ(kv.number("a", 0), 1.5);
  EXPECT_DOUBLE_EQ(kv.number("b", 0), 2.0);
  EXPECT_DOUBLE_EQ(kv.number("c", 7), 7.0);
}

TEST(Config, MalformedLines) {
  EXPECT_THROW(parse("just words\n"), Error);
  EXPECT_THROW(parse("a =\n"), Error);
  EXPECT_THROW(parse("a = 1x\n").number("a", 0), Error);
}

TEST(Config, RequiredAndUnknownKeys) {
  EXPECT_NO_THROW(physics_from(parse(base())));
  EXPECT_THROW(physics_from(parse("level.e1_ghz = 1\n")), Error);
  EXPECT_THROW(physics_from(parse(base() + "level.e7_ghz = 1\n")), Error);
  EXPECT_THROW(physics_from(parse(base() + "dipole.f11 = 0.5\n")), Error);
  EXPECT_THROW(physics_from(parse(base() + "scattering.guard_ghz = 0\n")), Error);
}

TEST(Config, OverrideWins) {
  KeyValueConfig kv = parse(base());
  kv.set("dipole.p0_debye", "10.4");
  const PhysicsConfig c = physics_from(kv);
  EXPECT_DOUBLE_EQ(c.p0_debye, 10.4);
  EXPECT_DOUBLE_EQ(c.rate.p0_debye, 10.4);
}

TEST(Config, ErrorKindsMapToExitClasses) {
  EXPECT_TRUE(Error(ErrorKind::Config, "").is_input_error());
  EXPECT_TRUE(Error(ErrorKind::Parse, "").is_input_error());
  EXPECT_FALSE(Error(ErrorKind::Numerical, "").is_input_error());
  EXPECT_FALSE(Error(ErrorKind::NearResonance, "").is_input_error());
}
