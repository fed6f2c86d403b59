#ifndef CATWALK_INTERVAL_HPP
#define CATWALK_INTERVAL_HPP

#include <algorithm>
#include <cfenv>
#include <cmath>

namespace catwalk {

// Directed-rounding interval arithmetic, just enough for residual
// certificates. Every operation brackets the exact result.
struct Interval {
    double lo = 0.0, hi = 0.0;

    Interval() = default;
    Interval(double v) : lo(v), hi(v) {}
    Interval(double l, double h) : lo(l), hi(h) {}

    static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }

    Interval inflated(double eps) const { return {lo - eps, hi + eps}; }
};

namespace detail {
struct RoundGuard {
    int saved;
    RoundGuard() : saved(std::fegetround()) {}
    ~RoundGuard() { std::fesetround(saved); }
};
} // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
    detail::RoundGuard guard;
    std::fesetround(FE_DOWNWARD);
    double lo = a.lo + b.lo;
    std::fesetround(FE_UPWARD);
    double hi = a.hi + b.hi;
    return {lo, hi};
}

inline Interval operator-(const Interval& a, const Interval& b) {
    detail::RoundGuard guard;
    std::fesetround(FE_DOWNWARD);
    double lo = a.lo - b.hi;
    std::fesetround(FE_UPWARD);
    double hi = a.hi - b.lo;
    return {lo, hi};
}

inline Interval operator*(const Interval& a, const Interval& b) {
    detail::RoundGuard guard;
    std::fesetround(FE_DOWNWARD);
    double lo = std::min(std::min(a.lo * b.lo, a.lo * b.hi), std::min(a.hi * b.lo, a.hi * b.hi));
    std::fesetround(FE_UPWARD);
    double hi = std::max(std::max(a.lo * b.lo, a.lo * b.hi), std::max(a.hi * b.lo, a.hi * b.hi));
    return {lo, hi};
}

inline Interval operator/(const Interval& a, const Interval& b) {
    // caller guarantees 0 is outside b
    detail::RoundGuard guard;
    std::fesetround(FE_DOWNWARD);
    double lo = std::min(std::min(a.lo / b.lo, a.lo / b.hi), std::min(a.hi / b.lo, a.hi / b.hi));
    std::fesetround(FE_UPWARD);
    double hi = std::max(std::max(a.lo / b.lo, a.lo / b.hi), std::max(a.hi / b.lo, a.hi / b.hi));
    return {lo, hi};
}

inline Interval abs(const Interval& a) {
    if (a.lo >= 0) return a;
    if (a.hi <= 0) return {-a.hi, -a.lo};
    return {0.0, std::max(-a.lo, a.hi)};
}

inline Interval pow_int(const Interval& a, int e) {
    Interval out(1.0);
    for (int i = 0; i < e; ++i) out = out * a;
    return out;
}

} // namespace catwalk

#endif
