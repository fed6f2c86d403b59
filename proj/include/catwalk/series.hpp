#ifndef CATWALK_SERIES_HPP
#define CATWALK_SERIES_HPP

#include "catwalk/polynomial.hpp"
#include "catwalk/rational.hpp"

#include <string>
#include <vector>

namespace catwalk {

// Power series truncated at an explicit order N: coefficients a_0..a_N, all
// arithmetic exact and closed at order N.
class TruncatedSeries {
  public:
    TruncatedSeries() : coeffs_(1) {}
    explicit TruncatedSeries(int order) : coeffs_(static_cast<size_t>(order) + 1) {}
    TruncatedSeries(int order, std::vector<Rational> coeffs);

    static TruncatedSeries from_polynomial(const UniPolynomial& p, int order);

    int order() const { return static_cast<int>(coeffs_.size()) - 1; }
    const Rational& coeff(int n) const { return coeffs_[static_cast<size_t>(n)]; }
    Rational& coeff(int n) { return coeffs_[static_cast<size_t>(n)]; }
    const std::vector<Rational>& coeffs() const { return coeffs_; }

    bool is_zero() const;
    // indices n <= order with a_n != 0
    std::vector<int> support() const;

    friend bool operator==(const TruncatedSeries& a, const TruncatedSeries& b) {
        return a.coeffs_ == b.coeffs_;
    }

    std::string str() const;

  private:
    std::vector<Rational> coeffs_;
};

TruncatedSeries series_add(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries series_scale(const TruncatedSeries& a, const Rational& c);
TruncatedSeries series_shift(const TruncatedSeries& a, int k);

enum class SeriesOp { add, mul, scale, shift };

struct SeriesOperand {
    const TruncatedSeries* series = nullptr;
    const Rational* scalar = nullptr;
    int shift = 0;
};

// Single dispatch surface over the four coefficientwise operations; the
// binary ops require equal truncation orders.
TruncatedSeries series_combine(SeriesOp op, const TruncatedSeries& a, const SeriesOperand& b);

} // namespace catwalk

#endif
