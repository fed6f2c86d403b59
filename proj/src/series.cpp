#include "catwalk/series.hpp"

#include "catwalk/error.hpp"

#include <sstream>

namespace catwalk {

TruncatedSeries::TruncatedSeries(int order, std::vector<Rational> coeffs)
    : coeffs_(std::move(coeffs)) {
    if (order < 0) fail(ErrorKind::validation, "negative truncation order");
    coeffs_.resize(static_cast<size_t>(order) + 1);
}

TruncatedSeries TruncatedSeries::from_polynomial(const UniPolynomial& p, int order) {
    TruncatedSeries s(order);
    for (int n = 0; n <= order && n <= p.degree(); ++n) s.coeff(n) = p.coeff(n);
    return s;
}

bool TruncatedSeries::is_zero() const {
    for (const auto& c : coeffs_)
        if (!c.is_zero()) return false;
    return true;
}

std::vector<int> TruncatedSeries::support() const {
    std::vector<int> out;
    for (int n = 0; n <= order(); ++n)
        if (!coeff(n).is_zero()) out.push_back(n);
    return out;
}

std::string TruncatedSeries::str() const {
    std::ostringstream os;
    os << "[";
    for (int n = 0; n <= order(); ++n) {
        if (n) os << ",";
        os << coeff(n).str();
    }
    os << "]";
    return os.str();
}

static void require_same_order(const TruncatedSeries& a, const TruncatedSeries& b) {
    if (a.order() != b.order())
        fail(ErrorKind::validation, "truncation order mismatch: " +
                                        std::to_string(a.order()) + " vs " +
                                        std::to_string(b.order()));
}

TruncatedSeries series_add(const TruncatedSeries& a, const TruncatedSeries& b) {
    require_same_order(a, b);
    TruncatedSeries out(a.order());
    for (int n = 0; n <= a.order(); ++n) out.coeff(n) = a.coeff(n) + b.coeff(n);
    return out;
}

TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b) {
    require_same_order(a, b);
    TruncatedSeries out(a.order());
    for (int i = 0; i <= a.order(); ++i) {
        if (a.coeff(i).is_zero()) continue;
        for (int j = 0; i + j <= a.order(); ++j) {
            if (b.coeff(j).is_zero()) continue;
            out.coeff(i + j) += a.coeff(i) * b.coeff(j);
        }
    }
    return out;
}

TruncatedSeries series_scale(const TruncatedSeries& a, const Rational& c) {
    TruncatedSeries out(a.order());
    for (int n = 0; n <= a.order(); ++n) out.coeff(n) = a.coeff(n) * c;
    return out;
}

TruncatedSeries series_shift(const TruncatedSeries& a, int k) {
    if (k < 0) fail(ErrorKind::validation, "negative shift");
    TruncatedSeries out(a.order());
    for (int n = k; n <= a.order(); ++n) out.coeff(n) = a.coeff(n - k);
    return out;
}

TruncatedSeries series_combine(SeriesOp op, const TruncatedSeries& a, const SeriesOperand& b) {
    switch (op) {
        case SeriesOp::add:
            if (!b.series) fail(ErrorKind::validation, "add requires a series operand");
            return series_add(a, *b.series);
        case SeriesOp::mul:
            if (!b.series) fail(ErrorKind::validation, "mul requires a series operand");
            return series_mul(a, *b.series);
        case SeriesOp::scale:
            if (!b.scalar) fail(ErrorKind::validation, "scale requires a rational operand");
            return series_scale(a, *b.scalar);
        case SeriesOp::shift:
            return series_shift(a, b.shift);
    }
    fail(ErrorKind::internal, "unreachable series op");
}

} // namespace catwalk
