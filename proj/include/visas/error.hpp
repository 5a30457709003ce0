#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace visas {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeoError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Pearson correlation is undefined for a constant frame.
class ZeroVariance : public Error {
public:
    using Error::Error;
};

class InvalidFraction : public Error {
public:
    using Error::Error;
};

class MalformedBuffer : public Error {
public:
    using Error::Error;
};

/// All correlations in a fit window are equal, so no line can be fitted.
class DegenerateWindow : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ExtentTooLarge : public Error {
public:
    using Error::Error;
};

class FootprintOutOfBounds : public Error {
public:
    using Error::Error;
};

class StartBeyondStream : public Error {
public:
    using Error::Error;
};

class StreamTooShort : public Error {
public:
    StreamTooShort(std::size_t have, std::size_t need)
        : Error("stream too short: " + std::to_string(have) + " samples, need at least " +
                std::to_string(need)),
          required(need) {}
    std::size_t required;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line_no, const std::string& what)
        : Error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
    std::size_t line;
};

class MissingFrame : public Error {
public:
    explicit MissingFrame(const std::string& file)
        : Error("missing frame: " + file), path(file) {}
    std::string path;
};

class OutOfOrderTimestamp : public Error {
public:
    using Error::Error;
};

}  // namespace visas
