// Error taxonomy shared by the whole library.  The CLI maps these to exit codes:
// domain_error -> 2 (bad input), numeric_error -> 3 (computation cannot be trusted).
#pragma once

#include <stdexcept>
#include <string>

namespace diffcoh {

// Invalid input: malformed scene, violated precondition, incompatible arguments.
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Valid input, but the computation lost its accuracy contract
// (eigenvalue underflow, aliasing detected, compatibility drift, ...).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// A vector field that was required to have zero mean has a harmonic (constant)
// component; carries the offending component for the message.
struct harmonic_obstruction : domain_error {
    explicit harmonic_obstruction(const std::string& what) : domain_error(what) {}
};

}  // namespace diffcoh
