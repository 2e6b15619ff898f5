#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace leafmatch {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using PointList = std::vector<Vec3, Eigen::aligned_allocator<Vec3>>;

/// Base class for every recoverable pipeline failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what), line_(line) {}
    /// 1-based line number; 0 when the error is not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class ExtractionError : public Error {
public:
    enum class Kind { OpenChain, SubLoop, ZeroLength, UnevenSampling };
    ExtractionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace leafmatch
