#pragma once

#include <stdexcept>
#include <string>

namespace vitl {

enum class ErrorKind {
    InvalidArgument,
    Dimension,
    Data,
    Config,
    Format,
    Io,
    Numerical,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Data: return "data";
        case ErrorKind::Config: return "config";
        case ErrorKind::Format: return "format";
        case ErrorKind::Io: return "io";
        case ErrorKind::Numerical: return "numerical";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define VITL_DEFINE_ERROR(Name, Kind)                                         \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(Kind, message) {}    \
    }

VITL_DEFINE_ERROR(InvalidArgument, ErrorKind::InvalidArgument);
VITL_DEFINE_ERROR(DimensionError, ErrorKind::Dimension);
VITL_DEFINE_ERROR(DataError, ErrorKind::Data);
VITL_DEFINE_ERROR(ConfigError, ErrorKind::Config);
VITL_DEFINE_ERROR(FormatError, ErrorKind::Format);
VITL_DEFINE_ERROR(IoError, ErrorKind::Io);
VITL_DEFINE_ERROR(NumericalError, ErrorKind::Numerical);

#undef VITL_DEFINE_ERROR

}  // namespace vitl
