#pragma once

#include <Eigen/Dense>

#include "attrib/matrix.h"

namespace attrib {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorMatrix> View(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

inline Matrix ToMatrix(const RowMajorMatrix& m) {
  return Matrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                std::vector<double>(m.data(), m.data() + m.size()));
}

}  // namespace attrib
