#pragma once

#include <stdexcept>
#include <string>

namespace latwalk {

enum class ErrorKind {
    Grade,          // exterior power grade out of range
    Inversion,      // singular matrix where an inverse is required
    Decomposition,  // rank-deficient QR input
    NotInP,         // matrix outside the block group P = AKU
    Domain,         // argument outside the operation's domain
    Dimension,      // shape mismatch or dimension over a cap
    Validation,     // malformed chain / IFS / config
    Reducible,      // chain is not irreducible
    NonRecurrence,  // excursion exceeded the step cap
    Path,           // edge sequence is not a path
    Divergence,     // natural projection failed to contract
    Overflow,       // lattice basis blew up despite reduction
    Size,           // representation too large
    InsufficientData,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace latwalk
