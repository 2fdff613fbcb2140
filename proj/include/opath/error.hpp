#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opath {

/// Base class of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` and `column` are 1-based, 0 when unknown.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line, std::size_t column = 0)
        : error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        std::string out = "line " + std::to_string(line);
        if (column > 0) out += ", column " + std::to_string(column);
        return out + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

class validation_error : public error {
public:
    using error::error;
};

class invalid_task_error : public error {
public:
    using error::error;
};

class precondition_error : public error {
public:
    using error::error;
};

/// Two tolerance bands overlap, so an index cannot be assigned to a single set.
class degenerate_error : public error {
public:
    using error::error;
};

class solver_error : public error {
public:
    using error::error;
};

} // namespace opath
