#pragma once

#include <stdexcept>
#include <string>

namespace facebench {

/// Broad failure classes. The C API and the CLI map these onto status and
/// exit codes, so every throw site picks the class a caller can act on.
enum class ErrorKind {
    Config,   ///< bad parameters or flags
    Data,     ///< input data does not satisfy a requirement
    Io,       ///< file system or format failure
    Numeric,  ///< a numerical routine could not produce a valid result
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) throw Error(kind, message);
}

}  // namespace facebench
