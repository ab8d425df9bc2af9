#pragma once

#include <Eigen/Dense>

namespace saferl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace saferl
