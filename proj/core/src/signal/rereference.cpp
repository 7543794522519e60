#include "latalign/signal/rereference.hpp"

#include "latalign/error.hpp"

namespace latalign {

SignalMatrix common_average_reference(const SignalMatrix& signal) {
  require(signal.rows() >= 2, ErrorCode::ShapeMismatch,
          "common average reference needs at least two channels");
  SignalMatrix out = signal.rowwise() - signal.colwise().mean();
  return out;
}

}  // namespace latalign
