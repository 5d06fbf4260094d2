#pragma once

#include <stdexcept>
#include <string>

namespace artai {

// Bad input: malformed files, out-of-range parameters, unknown names.
// Maps to CLI exit code 2 and HTTP 400.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Lookup of an id that does not exist. HTTP 404.
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Client-supplied name already taken. HTTP 409.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace artai
