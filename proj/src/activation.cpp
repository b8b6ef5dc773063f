#include "lannlab/activation.hpp"

#include <cmath>
#include <limits>

#include "lannlab/error.hpp"

namespace lannlab {

double Activation::operator()(double z) const {
    switch (kind_) {
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case ActivationKind::identity: return z;
    }
    return z;
}

double Activation::derivative(double z) const {
    switch (kind_) {
    case ActivationKind::tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case ActivationKind::sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-z));
        return s * (1.0 - s);
    }
    case ActivationKind::identity: return 1.0;
    }
    return 1.0;
}

double Activation::derivative_from_output(double y) const {
    switch (kind_) {
    case ActivationKind::tanh: return 1.0 - y * y;
    case ActivationKind::sigmoid: return y * (1.0 - y);
    case ActivationKind::identity: return 1.0;
    }
    return 1.0;
}

double Activation::inverse(double y) const {
    switch (kind_) {
    case ActivationKind::tanh: return std::atanh(y);
    case ActivationKind::sigmoid: return std::log(y) - std::log1p(-y);
    case ActivationKind::identity: return y;
    }
    return y;
}

double Activation::range_lo() const {
    switch (kind_) {
    case ActivationKind::tanh: return -1.0;
    case ActivationKind::sigmoid: return 0.0;
    case ActivationKind::identity: return -std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double Activation::range_hi() const {
    switch (kind_) {
    case ActivationKind::tanh: return 1.0;
    case ActivationKind::sigmoid: return 1.0;
    case ActivationKind::identity: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double Activation::max_abs_derivative() const {
    return kind_ == ActivationKind::sigmoid ? 0.25 : 1.0;
}

std::string_view Activation::name() const {
    switch (kind_) {
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::identity: return "identity";
    }
    return "tanh";
}

Activation Activation::from_name(std::string_view name) {
    if (name == "tanh") return Activation(ActivationKind::tanh);
    if (name == "sigmoid") return Activation(ActivationKind::sigmoid);
    if (name == "identity") return Activation(ActivationKind::identity);
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace lannlab
