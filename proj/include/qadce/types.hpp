#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qadce {

using Index = Eigen::Index;
using cdouble = std::complex<double>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

enum class ErrorCode {
    InvalidArgument = 1,
    DimensionMismatch,
    Config,
    NotConverged,
    Numeric,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Library exception. Every failure raised by the core carries a code that
/// the C API maps one-to-one onto a status value.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond)
        throw Error(code, what);
}

} // namespace qadce
