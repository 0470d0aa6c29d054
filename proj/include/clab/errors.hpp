#pragma once

#include <stdexcept>
#include <string>

namespace clab {

// Exit-code families used by the command line front end.
enum class ErrorKind { Usage = 2, Numerical = 3, IO = 4 };

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg, ErrorKind kind)
        : std::runtime_error(msg), code_(std::move(code)), kind_(kind) {}
    const std::string& code() const { return code_; }
    ErrorKind kind() const { return kind_; }

private:
    std::string code_;
    ErrorKind kind_;
};

#define CLAB_ERROR(Name, Kind)                                              \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& msg) : Error(#Name, msg, Kind) {}  \
    };

CLAB_ERROR(InvalidArgument, ErrorKind::Usage)
CLAB_ERROR(UnsupportedSupport, ErrorKind::Numerical)
CLAB_ERROR(TooFine, ErrorKind::Usage)
CLAB_ERROR(EllipticityViolation, ErrorKind::Numerical)
CLAB_ERROR(SolverFailure, ErrorKind::Numerical)
CLAB_ERROR(DegreeTooHigh, ErrorKind::Usage)
CLAB_ERROR(ShapeMismatch, ErrorKind::Usage)
CLAB_ERROR(NoConvergence, ErrorKind::Numerical)
CLAB_ERROR(ZeroFrequency, ErrorKind::Usage)
CLAB_ERROR(ZeroOnGrid, ErrorKind::Numerical)
CLAB_ERROR(BadExponents, ErrorKind::Usage)
CLAB_ERROR(SupportViolation, ErrorKind::Usage)
CLAB_ERROR(DegenerateLayers, ErrorKind::Usage)
CLAB_ERROR(BadOrdering, ErrorKind::Usage)
CLAB_ERROR(IOError, ErrorKind::IO)

#undef CLAB_ERROR

}  // namespace clab
