#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "catwalk/error.hpp"
#include "catwalk/polysystem.hpp"
#include "catwalk/series.hpp"

#include <random>

using namespace catwalk;

namespace {

TruncatedSeries make_series(std::initializer_list<long> values) {
    std::vector<Rational> coeffs;
    for (long v : values) coeffs.emplace_back(v);
    return TruncatedSeries(static_cast<int>(coeffs.size()) - 1, coeffs);
}

TruncatedSeries random_series(std::mt19937_64& rng, int order) {
    TruncatedSeries s(order);
    for (int n = 0; n <= order; ++n)
        s.coeff(n) = Rational(static_cast<long>(rng() % 5), static_cast<long>(1 + rng() % 3));
    return s;
}

} // namespace

TEST_CASE("rational parsing and canonical form") {
    CHECK(Rational::parse("3/6") == Rational(1, 2));
    CHECK(Rational::parse("7") == Rational(7));
    CHECK(Rational::parse("0/5").is_zero());
    CHECK(Rational(2, 4).str() == "1/2");
    CHECK(Rational(-1, 2).is_negative());
    CHECK_THROWS_AS(Rational::parse("1/0"), Error);
    CHECK_THROWS_AS(Rational::parse("a"), Error);
    CHECK_THROWS_AS(Rational::parse(""), Error);
}

TEST_CASE("polynomial arithmetic trims and multiplies") {
    UniPolynomial p({Rational(1), Rational(1)});
    UniPolynomial q = p * p;
    CHECK(q.degree() == 2);
    CHECK(q.coeff(1) == Rational(2));
    UniPolynomial z({Rational(0), Rational(0)});
    CHECK(z.is_zero());
    CHECK(z.degree() == -1);
    CHECK((p - p).is_zero());
}

TEST_CASE("series combine matches the coefficientwise examples") {
    CHECK(series_add(make_series({1, 0, 1}), make_series({0, 1, 0})) == make_series({1, 1, 1}));
    CHECK(series_mul(make_series({1, 1}), make_series({1, 1})) == make_series({1, 2}));
    // (1 + x^2 + 2x^4)^2 truncated at order 4
    TruncatedSeries cat = make_series({1, 0, 1, 0, 2});
    CHECK(series_mul(cat, cat) == make_series({1, 0, 2, 0, 5}));
    CHECK(series_shift(make_series({1, 2, 3}), 1) == make_series({0, 1, 2}));
    Rational half(1, 2);
    CHECK(series_scale(make_series({2, 4}), half) == make_series({1, 2}));

    SeriesOperand b;
    TruncatedSeries other = make_series({0, 1, 0});
    b.series = &other;
    CHECK(series_combine(SeriesOp::add, make_series({1, 0, 1}), b) == make_series({1, 1, 1}));
}

TEST_CASE("mismatched truncation orders are rejected") {
    CHECK_THROWS_AS(series_add(make_series({1}), make_series({1, 2})), Error);
    CHECK_THROWS_AS(series_mul(make_series({1}), make_series({1, 2})), Error);
}

TEST_CASE("ring laws on random truncated series") {
    std::mt19937_64 rng(20240811);
    for (int round = 0; round < 40; ++round) {
        int order = 1 + static_cast<int>(rng() % 8);
        auto a = random_series(rng, order);
        auto b = random_series(rng, order);
        auto c = random_series(rng, order);
        CHECK(series_add(a, b) == series_add(b, a));
        CHECK(series_mul(a, b) == series_mul(b, a));
        CHECK(series_mul(a, series_add(b, c)) ==
              series_add(series_mul(a, b), series_mul(a, c)));
    }
}

TEST_CASE("fixed point solve reproduces the Catalan equation") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1), 2, {y, y}}});
    auto sol = fixed_point_solve(sys, 8);
    CHECK(sol.of(y) == make_series({1, 0, 1, 0, 2, 0, 5, 0, 14}));
}

TEST_CASE("zero system solves to zero") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    sys.set_rhs(y, {});
    auto sol = fixed_point_solve(sys, 5);
    CHECK(sol.of(y).is_zero());
}

TEST_CASE("Dyck finite grammar series") {
    PolySystem sys;
    VarId f = sys.add_variable("F");
    VarId a = sys.add_variable("A");
    sys.set_rhs(f, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1), 0, {a, f}}});
    sys.set_rhs(a, {Monomial{Rational(1), 2, {f}}});
    auto sol = fixed_point_solve(sys, 6);
    CHECK(sol.of(f) == make_series({1, 0, 1, 0, 2, 0, 5}));
    CHECK(sol.of(a) == make_series({0, 0, 1, 0, 1, 0, 2}));
}

TEST_CASE("solution satisfies every equation exactly") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    VarId z = sys.add_variable("z");
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1, 2), 1, {y, z}},
                    Monomial{Rational(2), 3, {z}}});
    sys.set_rhs(z, {Monomial{Rational(1), 1, {}}, Monomial{Rational(1), 1, {y}}});
    int N = 12;
    auto sol = fixed_point_solve(sys, N);
    for (VarId v = 0; v < sys.size(); ++v) {
        TruncatedSeries rhs(N);
        for (const auto& m : sys.rhs(v)) {
            TruncatedSeries term(N);
            if (m.xexp <= N) term.coeff(m.xexp) = m.coef;
            for (VarId w : m.vars) term = series_mul(term, sol.of(w));
            rhs = series_add(rhs, term);
        }
        CHECK(rhs == sol.of(v));
    }
}

TEST_CASE("iterates grow monotonically and stabilize") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1), 2, {y, y}}});
    int N = 8;
    auto iterates = iterate_system(sys, N, N + 1);
    for (size_t k = 0; k + 1 < iterates.size(); ++k)
        for (int n = 0; n <= N; ++n)
            CHECK(iterates[k].of(y).coeff(n) <= iterates[k + 1].of(y).coeff(n));
    auto sol = fixed_point_solve(sys, N);
    CHECK(iterates.back().of(y) == sol.of(y));
}

TEST_CASE("divergent x-free cycles are reported") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1), 0, {y}}});
    CHECK_THROWS_WITH_AS(static_cast<void>(fixed_point_solve(sys, 4)),
                         doctest::Contains("cycle"), Error);

    PolySystem sys2;
    VarId u = sys2.add_variable("u");
    sys2.set_rhs(u, {Monomial{Rational(1), 1, {}}, Monomial{Rational(1, 2), 0, {u}}});
    CHECK_THROWS_AS(static_cast<void>(fixed_point_solve(sys2, 4)), Error);
}

TEST_CASE("x-free monomials off cycles are fine") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    VarId z = sys.add_variable("z");
    // y = 1 + z*y has constant coupling through z, but z's constant is 0
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1), 0, {y, z}}});
    sys.set_rhs(z, {Monomial{Rational(1), 1, {}}});
    auto sol = fixed_point_solve(sys, 5);
    // y = 1/(1-x)
    for (int n = 0; n <= 5; ++n) CHECK(sol.of(y).coeff(n) == Rational(1));
}

TEST_CASE("solver is deterministic") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1, 3), 1, {y, y}}});
    auto a = fixed_point_solve(sys, 20);
    auto b = fixed_point_solve(sys, 20);
    CHECK(a.of(y) == b.of(y));
}

TEST_CASE("scaled expansion tracks the exact solution") {
    PolySystem sys;
    VarId y = sys.add_variable("y");
    sys.set_rhs(y, {Monomial{Rational(1), 0, {}}, Monomial{Rational(1), 1, {y, y}}});
    int N = 40;
    auto exact = fixed_point_solve(sys, N);
    double sigma = 0.25;
    auto scaled = expand_scaled(sys, sigma, N);
    double pw = 1.0;
    for (int n = 0; n <= N; ++n) {
        double want = exact.of(y).coeff(n).to_double() * pw;
        CHECK(scaled[0][static_cast<size_t>(n)] == doctest::Approx(want).epsilon(1e-12));
        pw *= sigma;
    }
}
