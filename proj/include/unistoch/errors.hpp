#pragma once

#include <stdexcept>
#include <string>

namespace unistoch {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or inconsistent caller input (shapes, ranges, schema).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine produced a value it cannot stand behind.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DependentQuadrupleError : public DomainError {
public:
    using DomainError::DomainError;
};

class DegenerateConfiguration : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace unistoch
