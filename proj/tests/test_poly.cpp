#include "netident/poly.hpp"
#include "netident/rational.hpp"
#include "netident/roots.hpp"

#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace netident;
using testsupport::random_nonzero_rat;
using testsupport::random_rat;

TEST_CASE("polynomial canonical form") {
  Poly p{Coeff(1), Coeff(2), Coeff(0), Coeff(0)};
  CHECK(p.degree() == 1);
  CHECK(Poly{}.is_zero());
  CHECK(Poly{}.degree() == -1);
  CHECK(Poly{Coeff(0)}.is_zero());
}

TEST_CASE("polynomial division and gcd") {
  Poly a{Coeff(-1), Coeff(0), Coeff(1)};  // z^2 - 1
  Poly b{Coeff(1), Coeff(1)};             // z + 1
  auto [q, r] = Poly::divmod(a, b);
  CHECK(r.is_zero());
  CHECK(q == Poly{Coeff(-1), Coeff(1)});
  CHECK(gcd(a, b) == b.monic());

  Poly c{Coeff(2), Coeff(2)};  // 2(z + 1)
  CHECK(gcd(c, c) == c.monic());
  CHECK(lcm(b, c) == b.monic());
}

TEST_CASE("degree cap triggers overflow error") {
  std::vector<Coeff> big(40, Coeff(1));
  Poly p{big};
  CHECK_THROWS_AS(p * p, DegreeOverflow);
}

TEST_CASE("rational arithmetic matches worked instances") {
  Rat A = Rat::delay();                                   // 1/z
  Rat B(Poly{Coeff(2)}, Poly::z());                       // 2/z
  SECTION("additive identity") { CHECK(A + Rat::zero() == A); }
  SECTION("monomial product") {
    CHECK(A * B == Rat(Poly{Coeff(2)}, Poly{Coeff(0), Coeff(0), Coeff(1)}));
  }
  SECTION("A*B + 1 expands to (z^2 + 2)/z^2") {
    Rat expect(Poly{Coeff(2), Coeff(0), Coeff(1)}, Poly{Coeff(0), Coeff(0), Coeff(1)});
    CHECK(A * B + Rat::one() == expect);
  }
  SECTION("division by zero rejected") {
    CHECK_THROWS_AS(A / Rat::zero(), std::domain_error);
  }
  SECTION("division may produce improper results") {
    Rat inv = Rat::one() / A;  // z
    CHECK(!inv.is_proper());
  }
}

TEST_CASE("feedthrough limits") {
  Rat equal_deg(Poly{Coeff(1), Coeff(1)}, Poly{Coeff(2), Coeff(1)});  // (z+1)/(z+2)
  CHECK(equal_deg.feedthrough() == 1);
  CHECK(Rat::delay().feedthrough() == 0);

  Rat r(Poly{Coeff(1), Coeff(0), Coeff(2)}, Poly{Coeff(3), Coeff(0), Coeff(1)});
  CHECK(r.feedthrough() == 2);
  // independent check: evaluate far from the origin
  double far = std::abs(r.evaluate({1e8, 0.0}));
  CHECK(far == Catch::Approx(2.0).epsilon(1e-6));

  CHECK_THROWS_AS(Rat::z().feedthrough(), ImproperError);
}

TEST_CASE("rational algebra laws on randomized cases") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    Rat a = random_rat(rng);
    Rat b = random_rat(rng);
    Rat c = random_rat(rng);
    CHECK(a + Rat::zero() == a);
    CHECK(a * Rat::one() == a);
    CHECK((a - a).is_zero());
    CHECK(a + b == b + a);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * (b + c) == a * b + a * c);
    Rat nz = random_nonzero_rat(rng);
    CHECK((a / nz) * nz == a);
  }
}

TEST_CASE("feedthrough is multiplicative on proper functions") {
  Rng rng(43);
  int done = 0;
  while (done < 200) {
    Rat a = random_rat(rng);
    Rat b = random_rat(rng);
    if (!a.is_proper() || !b.is_proper()) continue;
    ++done;
    CHECK((a * b).feedthrough() == a.feedthrough() * b.feedthrough());
  }
}

TEST_CASE("polynomial roots via companion matrix") {
  // (z - 1/2)(z + 1/4) = z^2 - z/4 - 1/8
  Poly p{Coeff(-1, 8), Coeff(-1, 4), Coeff(1)};
  auto roots = poly_roots(p);
  REQUIRE(roots.size() == 2);
  double r1 = std::abs(roots[0]), r2 = std::abs(roots[1]);
  CHECK(std::max(r1, r2) == Catch::Approx(0.5).margin(1e-12));
  CHECK(roots_inside_unit_circle(p));
  Poly unstable{Coeff(-2), Coeff(1)};  // root at 2
  CHECK(!roots_inside_unit_circle(unstable));
}
