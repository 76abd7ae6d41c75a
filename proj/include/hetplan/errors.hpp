#pragma once

#include <stdexcept>
#include <string>

namespace hetplan {

// Base for every error raised by the library. Callers that only need a
// diagnostic can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text document (model file, calibration table, config, plan).
class SyntaxError : public Error {
public:
    using Error::Error;
};

// Well-formed document describing something invalid: cycles, dangling
// references, divisibility violations, out-of-range parameters.
class SemanticError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// A layer or plan does not fit the FPGA budget.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

}  // namespace hetplan
