#include "catwalk/rational.hpp"

#include "catwalk/error.hpp"

#include <cctype>
#include <ostream>

namespace catwalk {

Rational::Rational(long n, long d) {
    if (d == 0) fail(ErrorKind::validation, "rational with zero denominator");
    v_ = mpq_class(n, d);
    v_.canonicalize();
}

Rational& Rational::operator/=(const Rational& o) {
    if (o.is_zero()) fail(ErrorKind::internal, "rational division by zero");
    v_ /= o.v_;
    return *this;
}

Rational Rational::parse(const std::string& text) {
    if (text.empty()) fail(ErrorKind::validation, "empty rational literal");
    for (char c : text) {
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '/' && c != '-' && c != '+')
            fail(ErrorKind::validation, "malformed rational literal '" + text + "'");
    }
    mpq_class v;
    if (v.set_str(text, 10) != 0)
        fail(ErrorKind::validation, "malformed rational literal '" + text + "'");
    if (v.get_den() == 0)
        fail(ErrorKind::validation, "zero denominator in rational literal '" + text + "'");
    v.canonicalize();
    return Rational(v);
}

std::string Rational::str() const {
    return v_.get_str();
}

std::ostream& operator<<(std::ostream& os, const Rational& r) {
    return os << r.str();
}

} // namespace catwalk
