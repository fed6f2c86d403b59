#ifndef CATWALK_POLYNOMIAL_HPP
#define CATWALK_POLYNOMIAL_HPP

#include "catwalk/rational.hpp"

#include <string>
#include <vector>

namespace catwalk {

// Univariate polynomial in x with rational coefficients, indexed by exponent.
// Trailing zeros are trimmed; the zero polynomial has an empty coefficient list.
class UniPolynomial {
  public:
    UniPolynomial() = default;
    explicit UniPolynomial(std::vector<Rational> coeffs);
    static UniPolynomial constant(const Rational& c);
    static UniPolynomial monomial(const Rational& c, int exponent);

    // degree of the zero polynomial is reported as -1
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }

    Rational coeff(int exponent) const;
    const std::vector<Rational>& coeffs() const { return coeffs_; }

    bool has_negative_coeff() const;

    UniPolynomial& operator+=(const UniPolynomial& o);
    UniPolynomial& operator-=(const UniPolynomial& o);
    friend UniPolynomial operator+(UniPolynomial a, const UniPolynomial& b) { return a += b; }
    friend UniPolynomial operator-(UniPolynomial a, const UniPolynomial& b) { return a -= b; }
    friend UniPolynomial operator*(const UniPolynomial& a, const UniPolynomial& b);

    friend bool operator==(const UniPolynomial& a, const UniPolynomial& b) {
        return a.coeffs_ == b.coeffs_;
    }

    double eval(double x) const;

    std::string str() const; // e.g. "1 + 2x + 1/2x^3"

  private:
    void trim();
    std::vector<Rational> coeffs_;
};

} // namespace catwalk

#endif
