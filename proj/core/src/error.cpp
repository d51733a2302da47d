#include "sarrain/error.hpp"

namespace sarrain {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::UnsupportedVersion: return "unsupported-version";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Range: return "range";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NoSignal: return "no-signal";
    case ErrorKind::Data: return "data";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace sarrain
