#pragma once

#include <Eigen/Dense>

namespace latalign {

/// Multichannel recording, one channel per row.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace latalign
