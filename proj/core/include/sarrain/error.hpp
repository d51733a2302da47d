#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sarrain {

enum class ErrorKind {
  Format,
  Corruption,
  UnsupportedVersion,
  Precondition,
  Range,
  Domain,
  NoSignal,
  Data,
  UndefinedMetric,
  Divergence,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base of every exception thrown by the toolkit. The kind is stable and
/// is what the CLI reports in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string path = {})
      : std::runtime_error(message), kind_(kind), path_(std::move(path)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

#define SARRAIN_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message, std::string path = {})       \
        : Error(ErrorKind::Kind, message, std::move(path)) {}              \
  };

SARRAIN_DEFINE_ERROR(FormatError, Format)
SARRAIN_DEFINE_ERROR(CorruptionError, Corruption)
SARRAIN_DEFINE_ERROR(UnsupportedVersionError, UnsupportedVersion)
SARRAIN_DEFINE_ERROR(PreconditionError, Precondition)
SARRAIN_DEFINE_ERROR(RangeError, Range)
SARRAIN_DEFINE_ERROR(DomainError, Domain)
SARRAIN_DEFINE_ERROR(NoSignalError, NoSignal)
SARRAIN_DEFINE_ERROR(DataError, Data)
SARRAIN_DEFINE_ERROR(UndefinedMetricError, UndefinedMetric)
SARRAIN_DEFINE_ERROR(DivergenceError, Divergence)
SARRAIN_DEFINE_ERROR(IoError, Io)

#undef SARRAIN_DEFINE_ERROR

inline void require(bool cond, const std::string& message) {
  if (!cond) throw PreconditionError(message);
}

}  // namespace sarrain
