#include "lannlab/pwl.hpp"

#include <algorithm>
#include <cmath>

#include "lannlab/error.hpp"

namespace lannlab {

double tangent_breakpoint(Activation activation, double p, double q) {
    const double slope_p = activation.derivative(p);
    const double slope_q = activation.derivative(q);
    const double midpoint = 0.5 * (p + q);
    if (std::abs(slope_p - slope_q) < PiecewiseLinearFn::parallel_tolerance) return midpoint;
    const double icpt_p = activation(p) - slope_p * p;
    const double icpt_q = activation(q) - slope_q * q;
    const double x = (icpt_q - icpt_p) / (slope_p - slope_q);
    if (std::isfinite(x) && x >= p && x < q) return x;
    return midpoint;
}

PiecewiseLinearFn::PiecewiseLinearFn(Activation activation, std::vector<double> sorted_points)
    : activation_(activation), points_(std::move(sorted_points)) {
    const std::size_t k = points_.size();
    slopes_.resize(k);
    intercepts_.resize(k);
    for (std::size_t t = 0; t < k; ++t) {
        slopes_[t] = activation_.derivative(points_[t]);
        intercepts_[t] = activation_(points_[t]) - slopes_[t] * points_[t];
    }
    breakpoints_.resize(k - 1);
    for (std::size_t t = 0; t + 1 < k; ++t) breakpoints_[t] = tangent_breakpoint(activation_, points_[t], points_[t + 1]);
}

PiecewiseLinearFn PiecewiseLinearFn::initial(Activation activation) {
    return PiecewiseLinearFn(activation, {0.0});
}

PiecewiseLinearFn PiecewiseLinearFn::from_tangent_points(Activation activation, std::vector<double> points) {
    if (points.empty()) throw ConfigError("a piecewise linear function needs at least one tangent point");
    for (double p : points)
        if (!std::isfinite(p)) throw ConfigError("tangent points must be finite");
    std::sort(points.begin(), points.end());
    for (std::size_t t = 1; t < points.size(); ++t)
        if (points[t] - points[t - 1] < duplicate_tolerance)
            throw ConfigError("duplicate tangent point " + std::to_string(points[t]));
    return PiecewiseLinearFn(activation, std::move(points));
}

bool PiecewiseLinearFn::has_tangent_near(double point) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), point - duplicate_tolerance);
    return it != points_.end() && *it - point < duplicate_tolerance;
}

PiecewiseLinearFn PiecewiseLinearFn::insert_tangent(double point) const {
    if (!std::isfinite(point)) throw ConfigError("tangent point must be finite");
    if (has_tangent_near(point)) throw ConfigError("duplicate tangent point " + std::to_string(point));
    std::vector<double> pts = points_;
    pts.insert(std::upper_bound(pts.begin(), pts.end(), point), point);
    return PiecewiseLinearFn(activation_, std::move(pts));
}

int PiecewiseLinearFn::active_index(double z) const {
    // Number of breakpoints strictly below z.
    return static_cast<int>(std::lower_bound(breakpoints_.begin(), breakpoints_.end(), z) - breakpoints_.begin());
}

double PiecewiseLinearFn::evaluate(double z) const {
    const auto t = static_cast<std::size_t>(active_index(z));
    return slopes_[t] * z + intercepts_[t];
}

nlohmann::json to_json(const PiecewiseLinearFn& fn) {
    return {
        {"activation", std::string(fn.activation().name())},
        {"tangent_points", fn.tangent_points()},
        {"breakpoints", fn.breakpoints()},
    };
}

PiecewiseLinearFn pwl_from_json(const nlohmann::json& j) {
    try {
        const auto activation = Activation::from_name(j.at("activation").get<std::string>());
        auto fn = PiecewiseLinearFn::from_tangent_points(activation, j.at("tangent_points").get<std::vector<double>>());
        if (j.contains("breakpoints")) {
            const auto stored = j.at("breakpoints").get<std::vector<double>>();
            if (stored.size() != fn.breakpoints().size())
                throw ConfigError("stored breakpoint count does not match the tangent points");
            for (std::size_t t = 0; t < stored.size(); ++t)
                if (std::abs(stored[t] - fn.breakpoints()[t]) > 1e-9 * std::max(1.0, std::abs(stored[t])))
                    throw ConfigError("stored breakpoint " + std::to_string(t) + " disagrees with the tangent lines");
        }
        return fn;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed piecewise linear JSON: ") + e.what());
    }
}

}  // namespace lannlab
