#ifndef LAPSIM_ERROR_HPP
#define LAPSIM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace lapsim {

enum class Errc {
    NotATree,
    IsolatedVertex,
    NonPositiveRate,
    UnknownVertex,
    Infeasible,
    NumericalFailure,
    AssumptionViolated,
    RateOverflow,
    InvalidHorizon,
    SingularSystem,
    EigenFailure,
    SingularLyapunov,
    EmptyReport,
    IoError,
    InvalidArgument,
};

const char* errc_name(Errc c);

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

/// One structural problem found while validating a system spec.
struct SpecIssue {
    Errc code;
    std::string detail;
};

/// Validation failure; holds every issue found, not just the first.
class SpecError : public Error {
public:
    explicit SpecError(std::vector<SpecIssue> issues)
        : Error(issues.empty() ? Errc::InvalidArgument : issues.front().code,
                format(issues)),
          issues_(std::move(issues)) {}

    const std::vector<SpecIssue>& issues() const { return issues_; }

private:
    static std::string format(const std::vector<SpecIssue>& issues);
    std::vector<SpecIssue> issues_;
};

} // namespace lapsim

#endif
