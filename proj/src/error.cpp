#include "latwalk/error.hpp"

namespace latwalk {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Grade: return "grade";
        case ErrorKind::Inversion: return "inversion";
        case ErrorKind::Decomposition: return "decomposition";
        case ErrorKind::NotInP: return "not_in_P";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Reducible: return "reducible";
        case ErrorKind::NonRecurrence: return "non_recurrence";
        case ErrorKind::Path: return "path";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Overflow: return "overflow";
        case ErrorKind::Size: return "size";
        case ErrorKind::InsufficientData: return "insufficient_data";
    }
    return "unknown";
}

}  // namespace latwalk
