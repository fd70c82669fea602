#include "latwalk/mp.hpp"

#include "latwalk/error.hpp"

namespace latwalk {

Real parse_real(const std::string& text) {
    if (text == "golden") return golden_ratio_conjugate();
    try {
        return Real(text);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Validation, "cannot parse real number '" + text + "'");
    }
}

}  // namespace latwalk
