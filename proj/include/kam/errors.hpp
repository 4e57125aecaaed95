#ifndef KAM_ERRORS_HPP
#define KAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kam {

/// Machine-readable reason a run or step stopped early.
enum class Cause {
    None,
    Certification,
    SmallDivisor,
    SingularSystem,
    NonContraction,
    TranslationFailure,
    BoundaryApproach,
    Integrator,
};

const char* to_string(Cause c);

class KamError : public std::runtime_error {
public:
    KamError(Cause cause, const std::string& what) : std::runtime_error(what), cause_(cause) {}
    Cause cause() const { return cause_; }

private:
    Cause cause_;
};

inline const char* to_string(Cause c)
{
    switch (c) {
    case Cause::None: return "none";
    case Cause::Certification: return "certification";
    case Cause::SmallDivisor: return "small_divisor";
    case Cause::SingularSystem: return "singular_system";
    case Cause::NonContraction: return "non_contraction";
    case Cause::TranslationFailure: return "translation_failure";
    case Cause::BoundaryApproach: return "boundary_approach";
    case Cause::Integrator: return "integrator";
    }
    return "unknown";
}

}  // namespace kam

#endif  // KAM_ERRORS_HPP
