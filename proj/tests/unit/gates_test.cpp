#include "nvgate/analysis.hpp"

#include <gtest/gtest.h>

using namespace nvgate;

namespace {

double dist(const Mat4c& a, const Mat4c& b) { return (a - b).cwiseAbs().maxCoeff(); }

Mat2c flip(double a1, double a2) {
  Mat2c t;
  t << 0, a2, -a1, 0;
  return t;
}

}  // namespace

TEST(IdealGate, Unitary) {
  const auto [r, l] = ideal_gates();
  EXPECT_LT(dist(r.m.adjoint() * r.m, Mat4c::Identity()), 1e-15);
  EXPECT_LT(dist(l.m.adjoint() * l.m, Mat4c::Identity()), 1e-15);
  EXPECT_NEAR(unitarity_defect(r), 0.0, 1e-14);
}

TEST(IdealGate, ControlledZDecomposition) {
  using namespace ops;
  const Mat2c s_inv = S().adjoint();
  const Mat4c hh = kron(Hd(), Hd());
  const Mat4c rhs = (1.0 + I) / std::sqrt(2.0) * hh * kron(s_inv, S()) * CZ() * hh;
  EXPECT_LT(dist(ideal_gates().first.m, rhs), 1e-12);
}

TEST(IdealGate, DetectorsRelatedByDoubleFlip) {
  const auto [r, l] = ideal_gates();
  EXPECT_LT(dist(r.m, ops::XX() * l.m), 1e-15);
}

TEST(IdealGate, ZeroPathPhaseBreaksOrthogonality) {
  const GateMatrix g = ideal_gates(0.0).first;
  EXPECT_GT(std::abs(g.m.col(0).dot(g.m.col(3))), 0.5);
  EXPECT_GT(unitarity_defect(g), 0.5);
}

TEST(Fidelity, M1ClosedForm) {
  const double a1 = 0.1696, a2 = 0.2252;
  const Mat2c t = flip(a1, a2);
  const GateMatrix g = two_nv_gate(t, Detector::Right);
  const GateMatrix u = two_nv_gate(ideal_transform(t), Detector::Right).normalized_copy();
  const double f = entanglement_fidelity(u, g);
  EXPECT_NEAR(f, 0.981, 0.001);
  EXPECT_NEAR(f, (a1 + a2) * (a1 + a2) / (2 * (a1 * a1 + a2 * a2)), 1e-10);
}

TEST(Fidelity, BalancedM1IsUnitary) {
  const GateMatrix g = two_nv_gate(flip(0.2, 0.2), Detector::Right).normalized_copy();
  EXPECT_NEAR(unitarity_defect(g), 0.0, 1e-14);
}

TEST(Fidelity, M2ClosedForm) {
  const double ap = 0.0278, ab = 0.1974;
  Mat2c t;
  t << ap, -ab, ab, ap;
  const GateMatrix g = two_nv_gate(t, Detector::Right);
  const GateMatrix u = two_nv_gate(ideal_transform(t), Detector::Right).normalized_copy();
  EXPECT_NEAR(entanglement_fidelity(u, g), ab * ab / (ab * ab + ap * ap), 1e-12);
  EXPECT_NEAR(entanglement_fidelity(u, g), 0.981, 0.001);
}

TEST(Fidelity, IdenticalIsOne) {
  const auto r = ideal_gates().first;
  EXPECT_NEAR(entanglement_fidelity(r, r), 1.0, 1e-15);
}

TEST(Unbalanced, EqualAmplitudesAreUnitary) {
  const UnbalancedGate g = unbalanced_two_nv_gate({0.3, 0.3, 0.3, 0.3});
  EXPECT_NEAR(g.fidelity, 1.0, 1e-14);
}

TEST(Unbalanced, BothPatternsMatchExactFormula) {
  const double d = 0.1;
  const double exact = 1.0 / (1.0 + d * d);
  EXPECT_NEAR(unbalanced_two_nv_gate({1 + d, 1 - d, 1 + d, 1 - d}).fidelity, exact, 1e-12);
  EXPECT_NEAR(unbalanced_two_nv_gate({1 - d, 1 - d, 1 + d, 1 + d}).fidelity, exact, 1e-12);
  EXPECT_NEAR(exact, 0.990, 0.0005);
}

TEST(Unbalanced, ExpansionErrorIsFourthOrder) {
  for (const auto& r : unbalanced_scan({0.05, 0.1, 0.2})) {
    const double x = r.ratio;
    EXPECT_LT(std::abs(r.exact - r.expansion), 1.01 * std::pow(x, 4)) << r.pattern << ' ' << x;
  }
}

class SchemeGates : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { w = new WorkingPoints(working_points(load_physics())); }
  static void TearDownTestSuite() { delete w; }
  static WorkingPoints* w;
};
WorkingPoints* SchemeGates::w = nullptr;

TEST_F(SchemeGates, M3MatchesIdealGate) {
  const SchemeConfig m3 = scheme_config(SchemeName::M3);
  const GateMatrix g = scheme_gate(m3, w->magic, Detector::Right).normalized_copy();
  const cplx phase = g.m(0, 1) / ideal_gates().first.m(0, 1);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-10);
  EXPECT_LT(dist(g.m, phase * ideal_gates().first.m), 1e-10);
}

TEST_F(SchemeGates, LeftAndRightDetectorsAgree) {
  for (SchemeName n : {SchemeName::M1, SchemeName::M2, SchemeName::M3, SchemeName::B1}) {
    const SchemeConfig s = scheme_config(n);
    const AmplitudeSet& a = w->for_rule(s.rule);
    EXPECT_NEAR(gate_report(s, a, Detector::Left).entanglement_fidelity,
                gate_report(s, a, Detector::Right).entanglement_fidelity, 1e-12);
  }
}

TEST_F(SchemeGates, ReportedFidelities) {
  EXPECT_NEAR(gate_report(scheme_config(SchemeName::M1), w->magic, Detector::Right).entanglement_fidelity, 0.981,
              0.001);
  EXPECT_NEAR(gate_report(scheme_config(SchemeName::M2), w->magic, Detector::Right).entanglement_fidelity, 0.981,
              0.001);
  EXPECT_NEAR(gate_report(scheme_config(SchemeName::B1), w->balance, Detector::Right).entanglement_fidelity, 1.0,
              1e-10);
}
