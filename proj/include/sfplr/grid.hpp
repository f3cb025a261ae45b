#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sfplr {

/// A discretized function on a Grid, stored as its values at the grid points.
using Curve = Eigen::VectorXd;

/// Shared abscissae t_1 < ... < t_G on [a, b] together with positive
/// quadrature weights summing to b - a. All curve-space inner products,
/// norms and distances are quadrature approximations against these weights.
class Grid {
  public:
    Grid(Eigen::VectorXd points, Eigen::VectorXd quad_weights)
        : points_(std::move(points)), quad_weights_(std::move(quad_weights)) {
        validate();
    }

    // Trapezoidal weights on (possibly nonuniform) points; exact for
    // constants, weights telescope to b - a.
    static Grid from_points(Eigen::VectorXd points) {
        const auto g = points.size();
        if (g < 2) throw std::invalid_argument("Grid: need at least 2 points");
        Eigen::VectorXd w(g);
        w(0) = (points(1) - points(0)) / 2.0;
        w(g - 1) = (points(g - 1) - points(g - 2)) / 2.0;
        for (Eigen::Index k = 1; k + 1 < g; ++k) w(k) = (points(k + 1) - points(k - 1)) / 2.0;
        return Grid(std::move(points), std::move(w));
    }

    static Grid uniform(double a, double b, Eigen::Index size) {
        if (!(a < b)) throw std::invalid_argument("Grid::uniform: need a < b");
        if (size < 2) throw std::invalid_argument("Grid::uniform: need size >= 2");
        return from_points(Eigen::VectorXd::LinSpaced(size, a, b));
    }

    // The paper's simulation design: 200 equally spaced points on [0, 1].
    static Grid default_unit(Eigen::Index size = 200) { return uniform(0.0, 1.0, size); }

    const Eigen::VectorXd& points() const { return points_; }
    const Eigen::VectorXd& quad_weights() const { return quad_weights_; }
    Eigen::Index size() const { return points_.size(); }
    double a() const { return points_(0); }
    double b() const { return points_(points_.size() - 1); }

    bool approx_equals(const Grid& other, double tol = 1e-12) const {
        return points_.size() == other.points_.size() &&
               (points_ - other.points_).cwiseAbs().maxCoeff() <= tol;
    }

  private:
    void validate() const {
        if (points_.size() != quad_weights_.size())
            throw std::invalid_argument("Grid: points/quad_weights length mismatch");
        if (points_.size() < 2) throw std::invalid_argument("Grid: need at least 2 points");
        for (Eigen::Index k = 0; k + 1 < points_.size(); ++k)
            if (!(points_(k) < points_(k + 1)))
                throw std::invalid_argument("Grid: points must be strictly increasing");
        if ((quad_weights_.array() <= 0.0).any())
            throw std::invalid_argument("Grid: quadrature weights must be positive");
        const double span = b() - a();
        if (std::abs(quad_weights_.sum() - span) > 1e-12 * std::max(1.0, span))
            throw std::invalid_argument("Grid: quadrature weights must sum to b - a");
        if (!points_.allFinite()) throw std::invalid_argument("Grid: non-finite points");
    }

    Eigen::VectorXd points_;
    Eigen::VectorXd quad_weights_;
};

namespace detail {
inline void check_aligned(const Curve& f, const Grid& grid, const char* where) {
    if (f.size() != grid.size())
        throw std::invalid_argument(std::string(where) + ": curve length " +
                                    std::to_string(f.size()) + " does not match grid size " +
                                    std::to_string(grid.size()));
}
}  // namespace detail

/// Quadrature approximation of ∫ f g.
inline double inner_product(const Curve& f, const Curve& g, const Grid& grid) {
    detail::check_aligned(f, grid, "inner_product");
    detail::check_aligned(g, grid, "inner_product");
    return (grid.quad_weights().array() * f.array() * g.array()).sum();
}

/// L2 distance d(f, g) = sqrt(∫ (f - g)^2); the semi-metric driving the
/// Nadaraya-Watson kernel weights.
inline double l2_semimetric(const Curve& f, const Curve& g, const Grid& grid) {
    detail::check_aligned(f, grid, "l2_semimetric");
    detail::check_aligned(g, grid, "l2_semimetric");
    const Eigen::ArrayXd d = f.array() - g.array();
    return std::sqrt((grid.quad_weights().array() * d * d).sum());
}

inline double curve_norm(const Curve& f, const Grid& grid) {
    detail::check_aligned(f, grid, "curve_norm");
    return std::sqrt((grid.quad_weights().array() * f.array() * f.array()).sum());
}

}  // namespace sfplr
