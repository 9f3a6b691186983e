#pragma once

#include <stdexcept>
#include <string>

namespace gazelab {

/// Base class for every error raised by the library. `kind()` is a stable
/// identifier suitable for tests and one-line CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message);
    const std::string& kind() const noexcept { return kind_; }
    /// The message without the kind prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string kind_;
    std::string message_;
};

#define GAZELAB_DECLARE_ERROR(Name)                                          \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

GAZELAB_DECLARE_ERROR(DegenerateDirection);
GAZELAB_DECLARE_ERROR(ParallelRay);
GAZELAB_DECLARE_ERROR(BehindOrigin);
GAZELAB_DECLARE_ERROR(ShapeMismatch);
GAZELAB_DECLARE_ERROR(NonScalarRoot);
GAZELAB_DECLARE_ERROR(NonFiniteValue);
GAZELAB_DECLARE_ERROR(EmptyDataset);
GAZELAB_DECLARE_ERROR(DivergenceDetected);
GAZELAB_DECLARE_ERROR(InvalidConfig);
GAZELAB_DECLARE_ERROR(VersionMismatch);
GAZELAB_DECLARE_ERROR(SchemaError);
GAZELAB_DECLARE_ERROR(TruncatedFile);
GAZELAB_DECLARE_ERROR(IoError);

#undef GAZELAB_DECLARE_ERROR

/// Rethrows `e` as the same error kind with "context: " prepended.
[[noreturn]] void throw_with_context(const Error& e, const std::string& context);

}  // namespace gazelab
