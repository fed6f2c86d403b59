#ifndef CATWALK_ERROR_HPP
#define CATWALK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace catwalk {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
    internal = 1,    // broken invariant / closure assertion
    validation = 2,  // schema, positivity, index range, trivial system
    divergence = 3,  // non-well-founded polynomial system
    mismatch = 4,    // grammar-vs-oracle check failure
    analysis = 5,    // singularity solver failure
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace catwalk

#endif
