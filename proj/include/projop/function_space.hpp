#pragma once

/// Discretized L^p spaces on S = [-1,1]^d with the normalized Lebesgue measure.
///
/// Functions are represented by their samples on a tensor-product Gauss-Legendre
/// rule whose weights sum to one. Every integral in the library is a weighted sum
/// over these nodes, so integrals of polynomials of per-axis degree at most
/// 2*points_per_axis - 1 are exact up to rounding.

#include "projop/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace projop {

/// Largest tensor rule build_quadrature will allocate.
inline constexpr std::size_t kMaxQuadratureNodes = std::size_t{1} << 21;

/// Largest admissible exponent of an L^p norm. Above this |v|^p is
/// indistinguishable from the sup norm at double precision.
inline constexpr double kMaxNormExponent = 64.0;

/// Exponent p of an L^p norm, 1 < p <= 64.
class PNorm {
public:
    explicit PNorm(double p = 2.0) : p_(p) {
        require(std::isfinite(p) && p > 1.0 && p <= kMaxNormExponent, ErrorKind::usage,
                "norm exponent p must satisfy 1 < p <= " + std::to_string(kMaxNormExponent) +
                    ", got " + std::to_string(p));
    }

    double p() const noexcept { return p_; }
    /// Conjugate exponent q with 1/p + 1/q = 1.
    double conjugate() const noexcept { return p_ / (p_ - 1.0); }

    friend bool operator==(const PNorm&, const PNorm&) = default;

private:
    double p_;
};

/// Gauss-Legendre nodes and weights on [-1,1], weights summing to 2. Nodes ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_1d(int points) {
    require(points >= 1, ErrorKind::usage, "gauss_legendre_1d needs at least one point");
    const auto n = static_cast<std::size_t>(points);
    std::vector<double> nodes(n), weights(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? x : p1;
            const double pnm1 = n == 1 ? 1.0 : p0;
            derivative = static_cast<double>(n) * (x * pn - pnm1) / (x * x - 1.0);
            const double step = pn / derivative;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        // recompute derivative at the converged node for the weight
        {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? x : p1;
            const double pnm1 = n == 1 ? 1.0 : p0;
            derivative = static_cast<double>(n) * (x * pn - pnm1) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
    return {std::move(nodes), std::move(weights)};
}

/// Tensor Gauss-Legendre rule on [-1,1]^d realizing the normalized measure.
///
/// Node i has multi-index (i_1, ..., i_d) with the last axis varying fastest.
class Quadrature {
public:
    Quadrature(int dimension, int points_per_axis) : dimension_(dimension), points_(points_per_axis) {
        require(dimension >= 1, ErrorKind::usage, "quadrature dimension must be >= 1");
        require(points_per_axis >= 1, ErrorKind::usage, "points_per_axis must be >= 1");
        std::size_t count = 1;
        for (int j = 0; j < dimension; ++j) {
            if (count > kMaxQuadratureNodes / static_cast<std::size_t>(points_per_axis))
                fail(ErrorKind::resource, "quadrature node cap exceeded: " + std::to_string(points_per_axis) + "^" +
                                              std::to_string(dimension) + " > kMaxQuadratureNodes = " +
                                              std::to_string(kMaxQuadratureNodes));
            count *= static_cast<std::size_t>(points_per_axis);
        }
        auto [axis_nodes, axis_weights] = gauss_legendre_1d(points_per_axis);
        for (auto& w : axis_weights) w *= 0.5;
        axis_nodes_ = std::move(axis_nodes);
        axis_weights_ = std::move(axis_weights);

        const auto d = static_cast<std::size_t>(dimension);
        nodes_.resize(count * d);
        weights_.resize(count);
        std::vector<std::size_t> index(d, 0);
        for (std::size_t i = 0; i < count; ++i) {
            double w = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                nodes_[i * d + j] = axis_nodes_[index[j]];
                w *= axis_weights_[index[j]];
            }
            weights_[i] = w;
            for (std::size_t j = d; j-- > 0;) {
                if (++index[j] < static_cast<std::size_t>(points_per_axis)) break;
                index[j] = 0;
            }
        }
    }

    int dimension() const noexcept { return dimension_; }
    int points_per_axis() const noexcept { return points_; }
    std::size_t size() const noexcept { return weights_.size(); }

    std::span<const double> node(std::size_t i) const {
        const auto d = static_cast<std::size_t>(dimension_);
        return {nodes_.data() + i * d, d};
    }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> axis_nodes() const noexcept { return axis_nodes_; }

    /// Highest per-axis polynomial degree integrated exactly.
    int exact_degree() const noexcept { return 2 * points_ - 1; }

    /// Two rules are interchangeable iff they were built from the same parameters.
    bool same_as(const Quadrature& other) const noexcept {
        return dimension_ == other.dimension_ && points_ == other.points_;
    }

private:
    int dimension_;
    int points_;
    std::vector<double> axis_nodes_;
    std::vector<double> axis_weights_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

using QuadraturePtr = std::shared_ptr<const Quadrature>;

inline QuadraturePtr build_quadrature(int dimension, int points_per_axis) {
    return std::make_shared<const Quadrature>(dimension, points_per_axis);
}

/// Real values on the nodes of a quadrature; the discrete stand-in for f in L^p_mu(S).
class SampledFunction {
public:
    SampledFunction() = default;

    SampledFunction(QuadraturePtr quad, std::vector<double> values) : quad_(std::move(quad)), values_(std::move(values)) {
        require(quad_ != nullptr, ErrorKind::usage, "sampled function needs a quadrature");
        require(values_.size() == quad_->size(), ErrorKind::usage,
                "sample count " + std::to_string(values_.size()) + " does not match quadrature size " +
                    std::to_string(quad_->size()));
        for (double v : values_) require(std::isfinite(v), ErrorKind::domain, "sampled function has a non-finite value");
    }

    static SampledFunction constant(QuadraturePtr quad, double value) {
        const auto n = quad->size();
        return {std::move(quad), std::vector<double>(n, value)};
    }

    const QuadraturePtr& quadrature() const noexcept { return quad_; }
    std::span<const double> values() const& noexcept { return values_; }
    std::span<const double> values() const&& = delete;
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    bool shares_quadrature(const SampledFunction& other) const noexcept {
        return quad_ && other.quad_ && quad_->same_as(*other.quad_);
    }

    SampledFunction& operator+=(const SampledFunction& other) { return combine(other, 1.0); }
    SampledFunction& operator-=(const SampledFunction& other) { return combine(other, -1.0); }
    SampledFunction& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

    friend SampledFunction operator+(SampledFunction a, const SampledFunction& b) { return a += b; }
    friend SampledFunction operator-(SampledFunction a, const SampledFunction& b) { return a -= b; }
    friend SampledFunction operator*(double s, SampledFunction f) { return f *= s; }
    friend SampledFunction operator*(SampledFunction f, double s) { return f *= s; }

private:
    SampledFunction& combine(const SampledFunction& other, double sign) {
        require(shares_quadrature(other), ErrorKind::usage, "sampled functions live on different quadratures");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += sign * other.values_[i];
        return *this;
    }

    QuadraturePtr quad_;
    std::vector<double> values_;
};

/// Samples a callable `double(std::span<const double>)` on every node of quad.
template <typename Fn>
SampledFunction sample(const QuadraturePtr& quad, Fn&& fn) {
    std::vector<double> values(quad->size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(quad->node(i));
    return {quad, std::move(values)};
}

namespace detail {

inline void require_same_quadrature(const SampledFunction& f, const SampledFunction& g) {
    require(f.shares_quadrature(g), ErrorKind::usage, "sampled functions live on different quadratures");
}

inline void require_finite(const SampledFunction& f) {
    for (double v : f.values()) require(std::isfinite(v), ErrorKind::domain, "non-finite sample value");
}

} // namespace detail

namespace detail {

/// (sum_i w_i |v_i|^p)^(1/p) for any finite p >= 1, max-scaled against overflow.
inline double power_norm(std::span<const double> v, std::span<const double> w, double p) {
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double sum = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double r = v[i] / scale;
            sum += w[i] * r * r;
        }
        return scale * std::sqrt(sum);
    }
    for (std::size_t i = 0; i < v.size(); ++i) sum += w[i] * std::pow(std::abs(v[i]) / scale, p);
    return scale * std::pow(sum, 1.0 / p);
}

} // namespace detail

/// (sum_i w_i |f_i|^p)^(1/p).
inline double lp_norm(const SampledFunction& f, PNorm norm) {
    detail::require_finite(f);
    return detail::power_norm(f.values(), f.quadrature()->weights(), norm.p());
}

inline double distance(const SampledFunction& f, const SampledFunction& g, PNorm norm) {
    detail::require_same_quadrature(f, g);
    return lp_norm(f - g, norm);
}

/// sum_i w_i f_i rho_i, i.e. the integral of f against rho over the normalized measure.
inline double integrate_against(const SampledFunction& f, const SampledFunction& rho) {
    detail::require_same_quadrature(f, rho);
    const auto w = f.quadrature()->weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * f[i] * rho[i];
    return sum;
}

inline double integrate(const SampledFunction& f) {
    const auto w = f.quadrature()->weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * f[i];
    return sum;
}

} // namespace projop
