#ifndef SCA_ERRORS_HPP
#define SCA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sca {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Bad argument or violated precondition (also raised for inconsistent
// configurations).
class ArgumentError : public Error {
  public:
    explicit ArgumentError(const std::string &msg) : Error(msg) {}
};

// Unrecognized or corrupt on-disk layout (magic, version, truncation).
class FormatError : public Error {
  public:
    explicit FormatError(const std::string &msg) : Error(msg) {}
};

// Structurally valid file whose contents violate an invariant
// (length mismatches, non-finite samples).
class IntegrityError : public Error {
  public:
    explicit IntegrityError(const std::string &msg) : Error(msg) {}
};

// Not enough observations to estimate a statistic; carries the offending
// class label when one is known.
class InsufficientDataError : public Error {
  public:
    explicit InsufficientDataError(const std::string &msg, int class_label = -1)
        : Error(msg), class_label_(class_label) {}
    int class_label() const { return class_label_; }

  private:
    int class_label_;
};

// Covariance factorization failed even after regularization.
class ConditioningError : public Error {
  public:
    explicit ConditioningError(const std::string &msg) : Error(msg) {}
};

} // namespace sca

#endif
