#pragma once

#include <stdexcept>
#include <string>

namespace qib {

// Input violates a documented precondition (e.g. a matrix that was promised
// Hermitian is not).
class ContractViolationError : public std::runtime_error {
public:
    explicit ContractViolationError(const std::string& what) : std::runtime_error(what) {}
};

// A matrix claimed to be a state has real negativity or a broken trace.
class InvalidStateError : public std::runtime_error {
public:
    explicit InvalidStateError(const std::string& what) : std::runtime_error(what) {}
};

// A Choi matrix has a negative eigenvalue beyond tolerance.
class NotCompletelyPositiveError : public std::runtime_error {
public:
    explicit NotCompletelyPositiveError(const std::string& what) : std::runtime_error(what) {}
};

// The problem instance carries no information to trade off (I(X;Y) = 0).
class DegenerateInstanceError : public std::runtime_error {
public:
    explicit DegenerateInstanceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qib
