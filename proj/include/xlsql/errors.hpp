#ifndef XLSQL_ERRORS_HPP_INCLUDED
#define XLSQL_ERRORS_HPP_INCLUDED

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xlsql
{
/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text or document.
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t position = npos)
    : Error(position == npos ? what : "at position " + std::to_string(position) + ": " + what),
      position_(position)
    {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t position() const noexcept
    {
        return position_;
    }

private:
    std::size_t position_;
};

/// Well-formed input that violates a structural invariant.
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// A SQL identifier that does not resolve against the schema.
class ResolutionError : public Error
{
public:
    using Error::Error;
};

/// Reference data (gold queries, aligned files) is unusable.
class DataError : public Error
{
public:
    using Error::Error;
};

/// Embedding service unreachable after retries.
class TransportError : public Error
{
public:
    using Error::Error;
};

/// Embedding service answered with a document that breaks the wire contract.
class ProtocolError : public Error
{
public:
    using Error::Error;
};
} // namespace xlsql

#endif // XLSQL_ERRORS_HPP_INCLUDED
