#pragma once

#include <Eigen/Dense>

namespace mprox {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

} // namespace mprox
