#ifndef GPL_ERRORS_HPP
#define GPL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gpl {

// argument outside the mathematical domain of an operation
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// caller violated an interface contract (wrong boundary, bad config, ...)
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace gpl

#endif
