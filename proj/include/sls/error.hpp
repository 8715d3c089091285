#pragma once

#include <stdexcept>
#include <string>

namespace sls {

// Malformed or inconsistent user input: files, formulas, bids, laws.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluation outside the domain of a cost distribution.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A result that contradicts an invariant the library guarantees.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace sls
