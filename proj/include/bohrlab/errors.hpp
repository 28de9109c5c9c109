#pragma once

#include <stdexcept>
#include <string>

namespace bohrlab {

// Base class for everything this library throws on purpose.  The what()
// string always starts with the error tag so CLI output and logs stay
// greppable.
class Error : public std::runtime_error {
public:
    Error(const std::string& tag, const std::string& detail)
        : std::runtime_error(tag + ": " + detail), tag_(tag) {}
    const std::string& tag() const { return tag_; }

private:
    std::string tag_;
};

#define BOHRLAB_DEFINE_ERROR(Name)                              \
    class Name : public Error {                                \
    public:                                                     \
        explicit Name(const std::string& detail)                \
            : Error(#Name, detail) {}                           \
    }

BOHRLAB_DEFINE_ERROR(BadInput);            // malformed files, group strings, params
BOHRLAB_DEFINE_ERROR(SizeCapExceeded);     // group or transform over the configured cap
BOHRLAB_DEFINE_ERROR(NoRegularDilate);     // regularity search exhausted its grid
BOHRLAB_DEFINE_ERROR(HypothesisFailed);    // measured hypothesis of a lemma does not hold
BOHRLAB_DEFINE_ERROR(IncrementTooSmall);   // density gain below the promised fraction
BOHRLAB_DEFINE_ERROR(InitFailed);          // iteration seed state violates its invariant
BOHRLAB_DEFINE_ERROR(CaseSplitFailed);     // neither branch of a case split is available
BOHRLAB_DEFINE_ERROR(PostconditionFailed); // a verified postcondition came out false
BOHRLAB_DEFINE_ERROR(EmptyResult);         // a set that must be nonempty came out empty
BOHRLAB_DEFINE_ERROR(DichotomyFailed);     // neither branch of the dichotomy holds
BOHRLAB_DEFINE_ERROR(StepStalled);         // an iteration step made no progress
BOHRLAB_DEFINE_ERROR(MaxStepsExceeded);    // iteration ran past its step budget

#undef BOHRLAB_DEFINE_ERROR

} // namespace bohrlab
