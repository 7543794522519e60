#pragma once

#include "latalign/signal/signal_matrix.hpp"

namespace latalign {

/// Subtracts the instantaneous mean across channels from every channel.
SignalMatrix common_average_reference(const SignalMatrix& signal);

}  // namespace latalign
