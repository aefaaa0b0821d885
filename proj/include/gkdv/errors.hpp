#pragma once
#include <stdexcept>
#include <string>

namespace gkdv {

enum class ErrorKind {
    InvalidArgument,
    SingularSystem,
    DomainTooSmall,
    ConvergenceFailure,
    DegenerateLadder,
    BubbleCollision,
    GridTooNarrow,
    ProfileDomainExceeded,
    InitOutOfBand,
    StepFailure,
    NoConvergence,
    BlowupDetected,
    CFLViolation,
    TrajectoryTooSparse,
    BubbleCountMismatch,
    BadConfig,
    BadFile,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind k, const std::string& what)
        : std::runtime_error(std::string(to_string(k)) + ": " + what), kind_(k), msg_(what) {}
    ErrorKind kind() const { return kind_; }
    const std::string& message() const { return msg_; }

private:
    ErrorKind kind_;
    std::string msg_;
};

}  // namespace gkdv
