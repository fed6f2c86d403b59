#ifndef CATWALK_TESTS_SUPPORT_HPP
#define CATWALK_TESTS_SUPPORT_HPP

#include "catwalk/catalytic.hpp"
#include "catwalk/rational.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::string fixture_path(const std::string& name) {
    return std::string(CATWALK_FIXTURES) + "/" + name;
}

inline catwalk::CatalyticSystem load_fixture(const std::string& name) {
    auto sys = catwalk::parse_catalytic_system(read_file(fixture_path(name)));
    return catwalk::canonicalize_and_validate(sys);
}

// Catalan numbers by the convolution recurrence; the independent oracle for
// the Dyck fixtures
inline std::vector<catwalk::Rational> catalan(int count) {
    std::vector<catwalk::Rational> c(static_cast<size_t>(count) + 1);
    c[0] = catwalk::Rational(1);
    for (int m = 0; m < count; ++m) {
        catwalk::Rational acc;
        for (int i = 0; i <= m; ++i) acc += c[static_cast<size_t>(i)] * c[static_cast<size_t>(m - i)];
        c[static_cast<size_t>(m) + 1] = acc;
    }
    return c;
}

// seeded generator for the randomized suites: d <= 2, L <= 2, J <= 3,
// coefficients in {0, 1/2, 1, 2}, x-degrees <= 2
inline catwalk::CatalyticSystem random_system(std::mt19937_64& rng) {
    using catwalk::QKey;
    using catwalk::Rational;
    using catwalk::UniPolynomial;
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    while (true) {
        catwalk::CatalyticSystem sys;
        sys.d = pick(3) == 0 ? 2 : 1;
        sys.L = 1 + pick(2);
        sys.J = pick(4);
        int budget = 2 + pick(4); // nonzero Q entries
        const Rational choices[3] = {Rational(1, 2), Rational(1), Rational(2)};
        for (int attempt = 0; attempt < budget * 4 && static_cast<int>(sys.Q.size()) < budget;
             ++attempt) {
            QKey key{1 + pick(sys.d), 1 + pick(sys.d), pick(sys.L + 1), pick(sys.J + 1)};
            if (sys.Q.count(key)) continue;
            std::vector<Rational> coeffs(static_cast<size_t>(pick(3)) + 1);
            bool any = false;
            for (auto& c : coeffs)
                if (pick(2)) {
                    c = choices[pick(3)];
                    any = true;
                }
            if (!any) coeffs[0] = choices[pick(3)];
            sys.Q.emplace(key, UniPolynomial(std::move(coeffs)));
        }
        // bias toward systems with both climbs and descents
        if (pick(4) != 0) {
            QKey up{1, 1, 1, 0};
            if (!sys.Q.count(up)) sys.Q.emplace(up, UniPolynomial({Rational(1)}));
            int j = 1 + pick(std::max(1, sys.J));
            if (j <= sys.J) {
                QKey down{1, 1, 0, j};
                if (!sys.Q.count(down)) sys.Q.emplace(down, UniPolynomial({Rational(1)}));
            }
        }
        for (int s = 1; s <= sys.d; ++s)
            sys.P.emplace(std::make_pair(s, 0), UniPolynomial({Rational(1)}));
        if (sys.Q.empty()) continue;
        return catwalk::canonicalize_and_validate(sys);
    }
}

} // namespace testsupport

#endif
