#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <utility>

#include "sfplr/grid.hpp"

namespace sfplr {

/// n discretized curves on a shared grid, one curve per row.
class FunctionalSample {
  public:
    FunctionalSample(Grid grid, Eigen::MatrixXd data)
        : grid_(std::move(grid)), data_(std::move(data)) {
        if (data_.rows() < 1) throw std::invalid_argument("FunctionalSample: need n >= 1");
        if (data_.cols() != grid_.size())
            throw std::invalid_argument("FunctionalSample: data columns must match grid size");
        if (!data_.allFinite())
            throw std::invalid_argument("FunctionalSample: non-finite curve values");
    }

    const Grid& grid() const { return grid_; }
    const Eigen::MatrixXd& data() const { return data_; }
    Eigen::Index n() const { return data_.rows(); }
    Eigen::Index grid_size() const { return data_.cols(); }
    Curve curve(Eigen::Index i) const { return data_.row(i).transpose(); }

  private:
    Grid grid_;
    Eigen::MatrixXd data_;
};

/// Subtracts the pointwise sample mean; returns the centered sample and the
/// mean curve. For n = 1 the centered curve is identically zero.
inline std::pair<FunctionalSample, Curve> center_sample(const FunctionalSample& s) {
    Curve mean = s.data().colwise().mean().transpose();
    Eigen::MatrixXd centered = s.data().rowwise() - mean.transpose();
    return {FunctionalSample(s.grid(), std::move(centered)), std::move(mean)};
}

}  // namespace sfplr
