#ifndef ATCL_COMMON_HPP
#define ATCL_COMMON_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace atcl {

// Rejected input: caller supplied something that violates an operation's
// preconditions (shape mismatch, index out of range, bad config value).
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Internal consistency violation (plan/gradient misalignment and friends).
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

// File / stream problems, always carrying the path in the message.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss detected during training.
struct NumericAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInputError(msg);
}

} // namespace atcl

#endif
