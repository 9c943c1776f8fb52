#include "nvgate/config.hpp"
#include "nvgate/waveguide.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace nvgate;

namespace {

std::string dump(const ModeProfile& p) {
  std::ostringstream os;
  write_modes(os, p);
  return os.str();
}

ModeProfile reparse(const std::string& text, bool validate = true) {
  std::istringstream in(text);
  return parse_modes(in, validate);
}

ErrorKind kind_of(const std::string& text) {
  try {
    reparse(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Numerical;
}

}  // namespace

TEST(Modes, BundledSyntheticSet) {
  const ModeProfile p = load_modes(std::string(NVGATE_DATA_DIR) + "/synthetic_modes.txt");
  EXPECT_EQ(p.guided_count(), 2u);
  EXPECT_LT(normalization_residual(p), 0.01);
  for (const auto& m : p.modes) {
    if (m.guided) {
      EXPECT_NEAR(m.n_eff, 1.58, 1e-12);
    }
  }
}

TEST(Modes, RoundTripAndShuffledRows) {
  const ModeProfile p = synthetic_modes({11});
  const std::string text = dump(p);
  std::vector<std::string> header, rows;
  std::istringstream in(text);
  std::string line, shuffled;
  std::mt19937 rng(4);
  std::vector<std::string> block;
  auto flush = [&] {
    std::shuffle(block.begin(), block.end(), rng);
    for (const auto& r : block) shuffled += r + "\n";
    block.clear();
  };
  while (std::getline(in, line)) {
    if (line[0] == '#') {
      flush();
      shuffled += line + "\n";
    } else {
      block.push_back(line);
    }
  }
  flush();
  const ModeProfile a = reparse(text), b = reparse(shuffled);
  ASSERT_EQ(a.modes.size(), b.modes.size());
  EXPECT_EQ(a.xs, b.xs);
  EXPECT_EQ(a.eps, b.eps);
  for (std::size_t m = 0; m < a.modes.size(); ++m)
    for (std::size_t k = 0; k < a.modes[m].field.size(); ++k) EXPECT_EQ(a.modes[m].field[k], b.modes[m].field[k]);
}

TEST(Modes, DistinctErrors) {
  EXPECT_EQ(kind_of("# mode 1 guided 1 neff 1.5\n0 0 1 1 0 0 0 0\n"), ErrorKind::Parse);
  EXPECT_EQ(kind_of("0 0 1 1 0 0 0 0 0\n"), ErrorKind::Parse);
  EXPECT_EQ(kind_of("# mode 1 guided 1 neff 1.5\n0 0 1 1 0 0 0 0 0\n1 0 1 1 0 0 0 0 0\n0 1 1 1 0 0 0 0 0\n"),
            ErrorKind::Parse);
  // rectangular 2x2 grid, field far from unit norm
  EXPECT_EQ(kind_of("# mode 1 guided 1 neff 1.5\n0 0 1 5 0 0 0 0 0\n1 0 1 5 0 0 0 0 0\n0 1 1 5 0 0 0 0 0\n"
                    "1 1 1 5 0 0 0 0 0\n"),
            ErrorKind::Validation);
  EXPECT_THROW(load_modes("/nonexistent/modes.txt"), Error);
}

TEST(Modes, ScalingFailsValidationUntilRenormalized) {
  ModeProfile p = synthetic_modes();
  const BalancedCoupling before = find_balanced_coupling(p);
  for (auto& m : p.modes)
    for (auto& e : m.field) e *= 2.0;
  EXPECT_THROW(validate_modes(p), Error);
  const BalancedCoupling scaled = find_balanced_coupling(p);
  EXPECT_NEAR(scaled.u_per_um / before.u_per_um, 2.0, 1e-9);
  const ModeProfile q = renormalize(p);
  EXPECT_LT(normalization_residual(q), 1e-12);
  EXPECT_NEAR(find_balanced_coupling(q).u_per_um, before.u_per_um, 1e-9);
}

TEST(Collection, SingleGuidedModeWithoutOtherField) {
  ModeProfile p = synthetic_modes();
  p.modes[1].guided = false;
  for (auto& e : p.modes[1].field) e.setZero();
  const CollectionResult r = collection_efficiency(p, 0.0, 0.1, Eigen::Vector3d::UnitX());
  EXPECT_DOUBLE_EQ(r.eta, 1.0);
}

TEST(Collection, NonGuidedModeReducesEfficiency) {
  const ModeProfile p = synthetic_modes();
  const CollectionResult r = collection_efficiency(p, 0.2, 0.0, Eigen::Vector3d::UnitX());
  EXPECT_GT(r.eta, 0.0);
  EXPECT_LT(r.eta, 1.0);
  EXPECT_FALSE(r.relative_to_supplied_set);
  const CollectionResult z = collection_efficiency(p, 0.0, 0.0, Eigen::Vector3d::UnitZ());
  EXPECT_NEAR(z.eta, 0.0, 1e-12);
}

TEST(Collection, GuidedOnlySetIsFlaggedRelative) {
  ModeProfile p = synthetic_modes();
  p.modes.pop_back();
  EXPECT_TRUE(collection_efficiency(p, 0.0, 0.0, Eigen::Vector3d::UnitX()).relative_to_supplied_set);
}

TEST(Collection, OutsideGridRejected) {
  EXPECT_THROW(collection_efficiency(synthetic_modes(), 3.0, 0.0, Eigen::Vector3d::UnitX()), Error);
}

TEST(Balanced, SymmetricModesCrossAtCentre) {
  SyntheticModeOptions o;
  o.eps_core = 1.0;
  const BalancedCoupling b = find_balanced_coupling(synthetic_modes(o));
  EXPECT_NEAR(b.y_um, 0.0, 1e-9);
  EXPECT_GT(b.u_per_um, 0.0);
}

TEST(Balanced, NeedsTwoGuidedModes) {
  ModeProfile p = synthetic_modes();
  p.modes[1].guided = false;
  EXPECT_THROW(find_balanced_coupling(p), Error);
}
