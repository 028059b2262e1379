#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace kio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct InfeasibleRecord : Error {
    int index;
    InfeasibleRecord(int idx, const std::string& msg) : Error(msg), index(idx) {}
};

struct SolverFailure : Error {
    using Error::Error;
};

struct Infeasible : Error {
    using Error::Error;
};

struct ModeMismatch : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

}  // namespace kio
