#include "coalclust/error.hpp"

namespace coalclust {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::structural: return "structural-error";
    case ErrorKind::argument: return "argument-error";
    case ErrorKind::data: return "data-error";
    case ErrorKind::time_order: return "time-order-error";
    case ErrorKind::degenerate_likelihood: return "degenerate-likelihood-error";
    case ErrorKind::solver: return "solver-error";
    case ErrorKind::numeric: return "numeric-error";
    case ErrorKind::configuration: return "configuration-error";
    case ErrorKind::unsupported_model: return "unsupported-model-error";
    case ErrorKind::ingestion: return "ingestion-error";
    case ErrorKind::undefined_metric: return "undefined-metric-error";
    case ErrorKind::degeneracy: return "degeneracy-error";
    case ErrorKind::column_unrestorable: return "column-unrestorable-error";
  }
  return "error";
}

}  // namespace coalclust
