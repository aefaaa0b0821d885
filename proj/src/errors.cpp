#include "gkdv/errors.hpp"

namespace gkdv {

const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::DegenerateLadder: return "DegenerateLadder";
    case ErrorKind::BubbleCollision: return "BubbleCollision";
    case ErrorKind::GridTooNarrow: return "GridTooNarrow";
    case ErrorKind::ProfileDomainExceeded: return "ProfileDomainExceeded";
    case ErrorKind::InitOutOfBand: return "InitOutOfBand";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::BlowupDetected: return "BlowupDetected";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::TrajectoryTooSparse: return "TrajectoryTooSparse";
    case ErrorKind::BubbleCountMismatch: return "BubbleCountMismatch";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::BadFile: return "BadFile";
    }
    return "Unknown";
}

}  // namespace gkdv
