#pragma once

#include <Eigen/Dense>

namespace scot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace scot
