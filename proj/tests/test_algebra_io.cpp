#include <gtest/gtest.h>

#include "support.hpp"

using namespace loopalg;
using namespace loopalg::testing;

namespace {

const char* kM11 = "generator x deg 3\ngenerator y deg 3\ngenerator z deg 5\ndiff z = x*y\n";

TEST(CoreAlgebra, GradedCommutativity) {
  FreeCDGA m = parse_model(kM11);
  const Algebra& A = *m.alg;
  Element x = A.gen("x"), y = A.gen("y"), z = A.gen("z");
  EXPECT_EQ(A.multiply(x, y), -A.multiply(y, x));
  EXPECT_TRUE(A.multiply(x, x).is_zero());
  EXPECT_EQ(A.multiply(x, A.multiply(y, z)), A.multiply(A.multiply(x, y), z));
}

TEST(CoreAlgebra, EvenGeneratorsArePolynomial) {
  FreeCDGA m = parse_model("generator a deg 2\ngenerator b deg 5\ndiff b = a^3\n");
  const Algebra& A = *m.alg;
  Element a = A.gen("a");
  EXPECT_EQ(A.multiply(a, A.multiply(a, a)), parse_element(A, "a^3"));
  EXPECT_EQ(m.d(parse_element(A, "a*b")), parse_element(A, "a^4"));
}

TEST(CoreAlgebra, ZeroAndRationals) {
  FreeCDGA m = parse_model(kM11);
  EXPECT_TRUE(parse_element(*m.alg, "0").is_zero());
  Element h = parse_element(*m.alg, "1/2 x*y - 3/4 x*y");
  EXPECT_EQ(h, parse_element(*m.alg, "-1/4 x*y"));
}

TEST(CoreAlgebra, LeibnizOnRandomProducts) {
  for (unsigned seed = 0; seed < 24; ++seed) {
    RandomModel R = random_model(seed);
    auto L = build_L(parse_model(R.text));
    const Algebra& A = *L->alg;
    std::mt19937 rng(seed);
    for (int trial = 0; trial < 6; ++trial) {
      int da = 1 + static_cast<int>(rng() % 8), db = 1 + static_cast<int>(rng() % 8);
      Element a = random_element(A, da, rng), b = random_element(A, db, rng);
      for (const Derivation* d : {&L->delta, &L->s}) {
        Element lhs = (*d)(A.multiply(a, b));
        Scalar sign = is_odd(da * d->degree()) ? -1 : 1;
        Element rhs = A.multiply((*d)(a), b) + sign * A.multiply(a, (*d)(b));
        ASSERT_EQ(lhs, rhs) << R.text;
      }
    }
  }
}

TEST(ModelIo, ElevenManifoldBarDifferential) {
  auto L = build_L(parse_model(kM11));
  EXPECT_EQ(L->delta(L->parse("z'")), L->parse("-x'*y + x*y'"));
  EXPECT_TRUE(L->delta(L->parse("x'")).is_zero());
}

TEST(ModelIo, SphereModel) {
  FreeCDGA m = parse_model("generator x deg 3\ndiff x = 0\n");
  EXPECT_EQ(m.alg->size(), 1u);
  EXPECT_TRUE(m.d.value(0).is_zero());
}

TEST(ModelIo, ShippedModelsParse) {
  for (const auto& n : shipped_names()) EXPECT_NO_THROW(shipped(n)) << n;
  FreeCDGA a = shipped("appendixA");
  EXPECT_EQ(a.alg->size(), 6u);
  EXPECT_EQ(a.d.value(5).size(), 5u);
}

TEST(ModelIo, FundamentalClassAndAlphaTerm) {
  FreeCDGA m = parse_model(kM11);
  Element f = parse_element(*m.alg, "x*y*z");
  EXPECT_EQ(f.degree(), 11);
  auto L = build_L(shipped("appendixA"));
  Element t = L->parse("-1380 x1^11*x2^6*z'");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.terms().begin()->second, Scalar(-1380));
}

TEST(ModelIo, DiagnosticsAreDomainErrors) {
  EXPECT_THROW(parse_model("generator x deg 3\ndiff x = y\n"), DomainError);               // undeclared
  EXPECT_THROW(parse_model("generator x deg 3\ngenerator y deg 4\ndiff y = x\n"), DomainError);  // degree
  EXPECT_THROW(parse_model("generator x deg 3\ndiff x = (\n"), DomainError);               // syntax
  EXPECT_THROW(parse_model("generator a deg 2\ngenerator b deg 3\ngenerator c deg 4\ndiff a = b\ndiff b = c\n"),
               DomainError);  // d^2 != 0
  EXPECT_THROW(parse_model("generator x deg 3\nweight x = 0\n"), DomainError);
  FreeCDGA m = parse_model(kM11);
  EXPECT_THROW(parse_element(*m.alg, "w"), DomainError);
  EXPECT_THROW(parse_element(*m.alg, "1/0 x"), DomainError);
}

TEST(ModelIo, SquareZeroDiagnosticNamesGenerator) {
  try {
    parse_model("generator a deg 2\ngenerator b deg 3\ngenerator c deg 4\ndiff a = b\ndiff b = c\n");
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, RoundTripRandomModels) {
  for (unsigned seed = 0; seed < 30; ++seed) {
    RandomModel R = random_model(seed);
    FreeCDGA m = parse_model(R.text);
    FreeCDGA back = parse_model(serialize_model(m));
    ASSERT_EQ(serialize_model(back), serialize_model(m));
    auto L = build_L(m);
    std::mt19937 rng(seed);
    for (int n = 1; n < 10; ++n) {
      Element e = random_element(*L->alg, n, rng);
      ASSERT_EQ(L->parse(format_element(e)), e) << format_element(e);
    }
  }
}

TEST(ModelIo, ShippedRoundTrip) {
  for (const auto& n : shipped_names()) {
    FreeCDGA m = shipped(n);
    EXPECT_EQ(serialize_model(parse_model(serialize_model(m))), serialize_model(m)) << n;
  }
}

TEST(ModelIo, ReportJsonSchema) {
  Report r;
  r.command = "hh";
  r.model_name = "m";
  r.max_degree = 2;
  r.tables.push_back(TableRow{0, 1, {"1"}, Json::object()});
  r.verdicts["bv_exact"] = true;
  Json j = Json::parse(emit_report(r, Format::json));
  for (const char* k : {"command", "model_name", "max_degree", "tables", "verdicts", "witnesses", "elapsed_ms"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["tables"][0]["dimension"], 1);
  EXPECT_EQ(emit_report(r, Format::json), emit_report(r, Format::json));
  Report empty;
  EXPECT_TRUE(Json::parse(emit_report(empty, Format::json))["tables"].empty());
}

TEST(LoopModels, DifferentialsSquareToZeroOnRandomModels) {
  for (unsigned seed = 0; seed < 24; ++seed) {
    RandomModel R = random_model(seed);
    auto L = build_L(parse_model(R.text));
    auto E = build_E(L);
    for (std::size_t i = 0; i < L->alg->size(); ++i) {
      Element g = L->alg->gen(i);
      ASSERT_TRUE(L->delta(L->delta(g)).is_zero()) << R.text;
      ASSERT_TRUE(L->s(L->s(g)).is_zero()) << R.text;
      ASSERT_TRUE((L->delta(L->s(g)) + L->s(L->delta(g))).is_zero()) << R.text;
    }
    EXPECT_TRUE(E->D(E->alg->gen(E->u)).is_zero());
    for (std::size_t i = 0; i < E->alg->size(); ++i) ASSERT_TRUE(E->D(E->D(E->alg->gen(i))).is_zero());
  }
}

TEST(LoopModels, CyclicDifferentialOnElevenManifold) {
  auto E = build_E(build_L(parse_model(kM11)));
  EXPECT_EQ(E->D(E->parse("z")), E->parse("x*y + u*z'"));
  EXPECT_EQ(E->to_L(E->D(E->parse("z"))), E->L->parse("x*y"));
}

TEST(LoopModels, RejectsNonSimplyConnected) {
  EXPECT_THROW(build_L(parse_model("generator t deg 1\n")), DomainError);
}

TEST(LoopModels, GysinIdentities) {
  for (const auto& n : small_shipped()) {
    GysinReport g = gysin_check(build_E(build_L(shipped(n))), 14);
    EXPECT_TRUE(g.pass) << n << ": " << g.failure;
    EXPECT_GT(g.monomials_checked, 0u);
  }
  for (unsigned seed = 0; seed < 20; ++seed) {
    GysinReport g = gysin_check(build_E(build_L(parse_model(random_model(seed).text))), 10);
    EXPECT_TRUE(g.pass) << g.failure;
  }
}

}  // namespace
