#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "lannlab/activation.hpp"

namespace lannlab {

/// Piecewise linear approximation of one neuron's activation, built from
/// tangent lines of the activation curve.
///
/// Piece t (0-based) is the tangent at tangent_points()[t] and is active on
/// the half-open interval (breakpoints()[t-1], breakpoints()[t]], with the
/// outer bounds at -inf/+inf. Between adjacent tangent points p < q the
/// breakpoint is the intersection of the two tangents when it lies in [p, q);
/// parallel tangents or an intersection outside that interval (possible across
/// an inflection) fall back to the midpoint. The function may therefore jump
/// at a fallback breakpoint.
///
/// Values are immutable; insert_tangent returns a new function.
class PiecewiseLinearFn {
public:
    /// Tangent points closer than this are considered duplicates.
    static constexpr double duplicate_tolerance = 1e-12;
    static constexpr double parallel_tolerance = 1e-12;

    /// Single tangent at 0.
    static PiecewiseLinearFn initial(Activation activation);

    /// Any order; throws ConfigError on duplicates or non-finite points.
    static PiecewiseLinearFn from_tangent_points(Activation activation, std::vector<double> points);

    PiecewiseLinearFn insert_tangent(double point) const;
    bool has_tangent_near(double point) const;

    double evaluate(double z) const;
    /// 0-based index of the active piece.
    int active_index(double z) const;

    int piece_count() const { return static_cast<int>(points_.size()); }
    Activation activation() const { return activation_; }
    const std::vector<double>& tangent_points() const { return points_; }
    const std::vector<double>& slopes() const { return slopes_; }
    const std::vector<double>& intercepts() const { return intercepts_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    friend bool operator==(const PiecewiseLinearFn&, const PiecewiseLinearFn&) = default;

private:
    PiecewiseLinearFn(Activation activation, std::vector<double> sorted_points);

    Activation activation_;
    std::vector<double> points_;
    std::vector<double> slopes_;
    std::vector<double> intercepts_;
    std::vector<double> breakpoints_;
};

/// Breakpoint between the tangents at p < q (the rule documented above).
double tangent_breakpoint(Activation activation, double p, double q);

nlohmann::json to_json(const PiecewiseLinearFn& fn);
/// Slopes and intercepts are recomputed from the tangent points; stored
/// breakpoints must agree with the recomputed ones.
PiecewiseLinearFn pwl_from_json(const nlohmann::json& j);

}  // namespace lannlab
