#pragma once

#include <string>
#include <string_view>

namespace lannlab {

enum class ActivationKind { tanh, sigmoid, identity };

/// A scalar curve activation together with the pieces of calculus the
/// approximation code needs: derivative, inverse and output range.
///
/// `identity` has an unbounded range and exists for exact-approximation
/// fixtures; experiment entry points reject it.
class Activation {
public:
    constexpr Activation() = default;
    constexpr explicit Activation(ActivationKind kind) : kind_(kind) {}

    constexpr ActivationKind kind() const { return kind_; }

    double operator()(double z) const;
    double derivative(double z) const;
    /// Derivative expressed through the output y = phi(z).
    double derivative_from_output(double y) const;
    double inverse(double y) const;

    /// Open output range (lo, hi). Infinite for identity.
    double range_lo() const;
    double range_hi() const;
    bool bounded() const { return kind_ != ActivationKind::identity; }

    /// Largest value of |phi'| over the real line.
    double max_abs_derivative() const;

    std::string_view name() const;
    static Activation from_name(std::string_view name);

    friend constexpr bool operator==(Activation a, Activation b) { return a.kind_ == b.kind_; }

private:
    ActivationKind kind_ = ActivationKind::tanh;
};

}  // namespace lannlab
