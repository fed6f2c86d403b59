#include "catwalk/polynomial.hpp"

#include <sstream>

namespace catwalk {

UniPolynomial::UniPolynomial(std::vector<Rational> coeffs) : coeffs_(std::move(coeffs)) {
    trim();
}

UniPolynomial UniPolynomial::constant(const Rational& c) {
    if (c.is_zero()) return UniPolynomial();
    return UniPolynomial({c});
}

UniPolynomial UniPolynomial::monomial(const Rational& c, int exponent) {
    if (c.is_zero()) return UniPolynomial();
    std::vector<Rational> v(static_cast<size_t>(exponent) + 1);
    v.back() = c;
    return UniPolynomial(std::move(v));
}

Rational UniPolynomial::coeff(int exponent) const {
    if (exponent < 0 || exponent >= static_cast<int>(coeffs_.size())) return Rational();
    return coeffs_[static_cast<size_t>(exponent)];
}

bool UniPolynomial::has_negative_coeff() const {
    for (const auto& c : coeffs_)
        if (c.is_negative()) return true;
    return false;
}

void UniPolynomial::trim() {
    while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

UniPolynomial& UniPolynomial::operator+=(const UniPolynomial& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
    for (size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    trim();
    return *this;
}

UniPolynomial& UniPolynomial::operator-=(const UniPolynomial& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
    for (size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    trim();
    return *this;
}

UniPolynomial operator*(const UniPolynomial& a, const UniPolynomial& b) {
    if (a.is_zero() || b.is_zero()) return UniPolynomial();
    std::vector<Rational> out(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (size_t i = 0; i < a.coeffs_.size(); ++i) {
        if (a.coeffs_[i].is_zero()) continue;
        for (size_t j = 0; j < b.coeffs_.size(); ++j)
            out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    }
    return UniPolynomial(std::move(out));
}

double UniPolynomial::eval(double x) const {
    double acc = 0.0;
    for (size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i].to_double();
    return acc;
}

std::string UniPolynomial::str() const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i].is_zero()) continue;
        if (!first) os << " + ";
        first = false;
        if (i == 0 || coeffs_[i] != Rational(1)) os << coeffs_[i].str();
        if (i == 1) os << "x";
        else if (i > 1) os << "x^" << i;
    }
    return os.str();
}

} // namespace catwalk
