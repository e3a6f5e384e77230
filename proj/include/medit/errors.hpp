#pragma once

#include <stdexcept>
#include <string>

namespace medit {

// Error categories map onto CLI exit codes: usage-class errors (bad flags,
// missing files, schema violations) exit 2, everything else exits 1.
enum class ErrorCategory {
    kFormat,       // malformed file content
    kLayout,       // feature layout mismatch
    kInput,        // invalid operation input
    kConfig,       // invalid configuration
    kConsistency,  // cross-file or cross-structure inconsistency
    kIo,           // filesystem failure
    kCheckpoint,   // checkpoint version/shape problem
    kCapacity,     // sequence exceeds model capacity
    kNumerical,    // numerical degeneracy
    kUsage,        // CLI usage problem
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

    const char* category_name() const {
        switch (category_) {
            case ErrorCategory::kFormat: return "format";
            case ErrorCategory::kLayout: return "layout";
            case ErrorCategory::kInput: return "input";
            case ErrorCategory::kConfig: return "config";
            case ErrorCategory::kConsistency: return "consistency";
            case ErrorCategory::kIo: return "io";
            case ErrorCategory::kCheckpoint: return "checkpoint";
            case ErrorCategory::kCapacity: return "capacity";
            case ErrorCategory::kNumerical: return "numerical";
            case ErrorCategory::kUsage: return "usage";
        }
        return "unknown";
    }

private:
    ErrorCategory category_;
};

struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error(ErrorCategory::kFormat, m) {}
};
struct LayoutError : Error {
    explicit LayoutError(const std::string& m) : Error(ErrorCategory::kLayout, m) {}
};
struct InputError : Error {
    explicit InputError(const std::string& m) : Error(ErrorCategory::kInput, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorCategory::kConfig, m) {}
};
struct ConsistencyError : Error {
    explicit ConsistencyError(const std::string& m) : Error(ErrorCategory::kConsistency, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorCategory::kIo, m) {}
};
struct CheckpointError : Error {
    explicit CheckpointError(const std::string& m) : Error(ErrorCategory::kCheckpoint, m) {}
};
struct CapacityError : Error {
    explicit CapacityError(const std::string& m) : Error(ErrorCategory::kCapacity, m) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& m) : Error(ErrorCategory::kNumerical, m) {}
};
struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorCategory::kUsage, m) {}
};

}  // namespace medit
