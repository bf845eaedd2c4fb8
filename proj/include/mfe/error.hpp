#pragma once

#include <stdexcept>
#include <string>

namespace mfe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid geometric input: non-positive dimensions, self-intersection,
/// points outside the admissible region.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a singular configuration (coincident points, pole hits).
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A numerical construction could not reach the requested accuracy.
class RefinementError : public Error {
public:
    using Error::Error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

/// Malformed file or command-line input.
class InputError : public Error {
public:
    using Error::Error;
};

} // namespace mfe
