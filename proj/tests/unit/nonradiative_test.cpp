#include "nvgate/analysis.hpp"

#include <gtest/gtest.h>

using namespace nvgate;

TEST(NonRadiativeRate, FromLifetimes) {
  EXPECT_NEAR(gamma_nr_from_lifetimes(12.0, 7.8), 44.9, 0.1);
  EXPECT_DOUBLE_EQ(gamma_nr_from_lifetimes(9.0, 9.0), 0.0);
  EXPECT_NEAR(gamma_nr_from_lifetimes(12.0, 6.0), 83.333333, 1e-5);
  EXPECT_THROW(gamma_nr_from_lifetimes(0.0, 7.8), Error);
}

TEST(ThreeLevel, NoLossConservesTrace) {
  const auto pop = three_level_evolve({2.0, 0.5, 0.0}, 3.0);
  EXPECT_NEAR(pop[0] + pop[1], 1.0, 1e-9);
  EXPECT_NEAR(pop[2], 0.0, 1e-15);
  EXPECT_GT(pop[1], 1e-4);
}

TEST(ThreeLevel, NoDriveStaysInGround) {
  const auto pop = three_level_evolve({5.11, 0.0, 44.9}, 50.0);
  EXPECT_NEAR(pop[0], 1.0, 1e-12);
  EXPECT_NEAR(pop[2], 0.0, 1e-15);
}

TEST(ThreeLevel, FittedRateMatchesDressedEstimate) {
  const ThreeLevelParams p{5.11, 0.02 * 5.11, 44.9};
  ASSERT_TRUE(p.perturbative());
  const double fit = fit_dressed_loss_rate_mhz(p, 200.0);
  const double est = dressed_loss_rate_mhz(p);
  EXPECT_NEAR(fit / est, 1.0, 0.10);
}

class LossTable : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    c = new PhysicsConfig(load_physics());
    w = new WorkingPoints(working_points(*c));
  }
  static void TearDownTestSuite() {
    delete w;
    delete c;
  }
  static PhysicsConfig* c;
  static WorkingPoints* w;
};
PhysicsConfig* LossTable::c = nullptr;
WorkingPoints* LossTable::w = nullptr;

TEST_F(LossTable, ReferenceRatios) {
  const Table4 t = table4(*c, *w);
  const double expect[4] = {1.63, 0.975, 0.744, 0.412};
  ASSERT_EQ(t.rows.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(t.rows[k].reference_ratio / expect[k], 1.0, 0.02) << t.rows[k].label;
}

TEST_F(LossTable, RatioIndependentOfDriveField) {
  const Table4 a = table4(*c, *w);
  const Table4 b = table4(*c, *w, 2.0);
  EXPECT_NEAR(b.gamma0_mhz / a.gamma0_mhz, 4.0, 1e-12);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(b.rows[k].reference_ratio, a.rows[k].reference_ratio, 1e-10);
}

TEST_F(LossTable, SmallestDetuningAtMagicPoint) {
  EXPECT_NEAR(smallest_spin_detuning(c->levels, c->dipole(), w->magic_ghz, Axis::X), 5.11, 0.01);
  EXPECT_NEAR(smallest_spin_detuning(c->levels, c->dipole(), w->magic_ghz, Axis::Y), 3.95, 0.01);
}
