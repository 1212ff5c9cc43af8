#pragma once
#include <stdexcept>
#include <string>

namespace socialsparse {

// Bad arguments or violated preconditions. The CLI maps this to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent files on disk. Exit code 3.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or divergence during a solve. Exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace socialsparse
