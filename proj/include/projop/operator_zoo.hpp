#pragma once

/// Concrete operators T: L^p -> L^p used as ground truth: Fredholm integral
/// operators, Nemytskii (pointwise) operators, their Hammerstein composition,
/// and the closed-form solution of x = T x + f for rank-one kernels.

#include "projop/error.hpp"
#include "projop/function_space.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace projop {

/// Named scalar fields on [-1,1]^d, used as kernel factors and forcings.
enum class Field { zero, one, t, sum, prod, exp, sin, cos };

inline std::optional<Field> parse_field(std::string_view name) {
    if (name == "zero") return Field::zero;
    if (name == "one") return Field::one;
    if (name == "t") return Field::t;
    if (name == "sum") return Field::sum;
    if (name == "prod") return Field::prod;
    if (name == "exp") return Field::exp;
    if (name == "sin") return Field::sin;
    if (name == "cos") return Field::cos;
    return std::nullopt;
}

inline std::string_view to_string(Field f) {
    switch (f) {
    case Field::zero: return "zero";
    case Field::one: return "one";
    case Field::t: return "t";
    case Field::sum: return "sum";
    case Field::prod: return "prod";
    case Field::exp: return "exp";
    case Field::sin: return "sin";
    case Field::cos: return "cos";
    }
    return "?";
}

/// Value of a field at x. `t` is the first coordinate; `exp`, `sin`, `cos` act on the coordinate sum.
inline double evaluate(Field f, std::span<const double> x) {
    double s = 0.0, p = 1.0;
    for (double v : x) {
        s += v;
        p *= v;
    }
    switch (f) {
    case Field::zero: return 0.0;
    case Field::one: return 1.0;
    case Field::t: return x[0];
    case Field::sum: return s;
    case Field::prod: return p;
    case Field::exp: return std::exp(s);
    case Field::sin: return std::sin(std::numbers::pi * s);
    case Field::cos: return std::cos(std::numbers::pi * s);
    }
    return 0.0;
}

inline SampledFunction sample(const QuadraturePtr& quad, Field f) {
    return sample(quad, [f](std::span<const double> x) { return evaluate(f, x); });
}

/// Closed-form kernels k(t, s).
struct Kernel {
    enum class Kind { separable, exp_dot, gauss };

    Kind kind = Kind::separable;
    Field a = Field::t;  // separable factors: k(t,s) = a(t) b(s)
    Field b = Field::t;

    static Kernel separable(Field a, Field b) { return {Kind::separable, a, b}; }
    static Kernel exp_dot() { return {Kind::exp_dot, Field::one, Field::one}; }
    static Kernel gauss() { return {Kind::gauss, Field::one, Field::one}; }

    double operator()(std::span<const double> t, std::span<const double> s) const {
        switch (kind) {
        case Kind::separable: return evaluate(a, t) * evaluate(b, s);
        case Kind::exp_dot: {
            double dot = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j) dot += t[j] * s[j];
            return std::exp(dot);
        }
        case Kind::gauss: {
            double r2 = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j) r2 += (t[j] - s[j]) * (t[j] - s[j]);
            return std::exp(-r2);
        }
        }
        return 0.0;
    }

    std::string describe() const {
        switch (kind) {
        case Kind::separable: return "separable(" + std::string(to_string(a)) + "," + std::string(to_string(b)) + ")";
        case Kind::exp_dot: return "exp-dot";
        case Kind::gauss: return "gauss";
        }
        return "?";
    }
};

/// Pointwise nonlinearities g(u).
enum class Nonlinearity { identity, square, cube, sin, tanh };

inline std::optional<Nonlinearity> parse_nonlinearity(std::string_view name) {
    if (name == "identity") return Nonlinearity::identity;
    if (name == "square") return Nonlinearity::square;
    if (name == "cube") return Nonlinearity::cube;
    if (name == "sin") return Nonlinearity::sin;
    if (name == "tanh") return Nonlinearity::tanh;
    return std::nullopt;
}

inline std::string_view to_string(Nonlinearity g) {
    switch (g) {
    case Nonlinearity::identity: return "identity";
    case Nonlinearity::square: return "square";
    case Nonlinearity::cube: return "cube";
    case Nonlinearity::sin: return "sin";
    case Nonlinearity::tanh: return "tanh";
    }
    return "?";
}

inline double evaluate(Nonlinearity g, double u) {
    switch (g) {
    case Nonlinearity::identity: return u;
    case Nonlinearity::square: return u * u;
    case Nonlinearity::cube: return u * u * u;
    case Nonlinearity::sin: return std::sin(u);
    case Nonlinearity::tanh: return std::tanh(u);
    }
    return u;
}

/// (T f)(t) = lambda * sum_s w_s k(t, xi_s) f(xi_s).
inline SampledFunction fredholm_apply(const Kernel& kernel, double lambda, const SampledFunction& f) {
    const auto& quad = f.quadrature();
    const auto w = quad->weights();
    std::vector<double> out(quad->size(), 0.0);
    if (lambda == 0.0) return {quad, std::move(out)};
    if (kernel.kind == Kernel::Kind::separable) {
        double moment = 0.0;
        for (std::size_t s = 0; s < out.size(); ++s) moment += w[s] * evaluate(kernel.b, quad->node(s)) * f[s];
        for (std::size_t t = 0; t < out.size(); ++t) out[t] = lambda * evaluate(kernel.a, quad->node(t)) * moment;
        return {quad, std::move(out)};
    }
    for (std::size_t t = 0; t < out.size(); ++t) {
        double sum = 0.0;
        for (std::size_t s = 0; s < out.size(); ++s) sum += w[s] * kernel(quad->node(t), quad->node(s)) * f[s];
        out[t] = lambda * sum;
    }
    return {quad, std::move(out)};
}

/// (T f)(xi) = g(f(xi)) at every node.
inline SampledFunction nemytskii_apply(Nonlinearity g, const SampledFunction& f) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = evaluate(g, f[i]);
        require(std::isfinite(out[i]), ErrorKind::domain,
                "nonlinearity " + std::string(to_string(g)) + " produced a non-finite value at node " +
                    std::to_string(i));
    }
    return {f.quadrature(), std::move(out)};
}

inline SampledFunction hammerstein_apply(const Kernel& kernel, Nonlinearity g, double lambda,
                                         const SampledFunction& f) {
    return fredholm_apply(kernel, lambda, nemytskii_apply(g, f));
}

/// Solution of x = lambda * a(t) int b x dmu + f for the rank-one kernel a(t) b(s):
/// x = f + lambda * a * c with c = int b f dmu / (1 - lambda int a b dmu).
inline SampledFunction separable_fredholm_solution(const SampledFunction& a, const SampledFunction& b, double lambda,
                                                   const SampledFunction& f) {
    const double ab = integrate_against(a, b);
    const double bf = integrate_against(b, f);
    const double denominator = 1.0 - lambda * ab;
    require(std::abs(denominator) >= 1e-12, ErrorKind::singular,
            "resonant lambda: 1 - lambda * int(a b) = " + std::to_string(denominator));
    return f + (lambda * bf / denominator) * a;
}

inline SampledFunction separable_fredholm_solution(Field a, Field b, double lambda, const SampledFunction& f) {
    const auto& quad = f.quadrature();
    return separable_fredholm_solution(sample(quad, a), sample(quad, b), lambda, f);
}

/// Tagged operator with a uniform evaluation contract on sampled functions.
class OperatorHandle {
public:
    enum class Kind { zero, identity, fredholm, nemytskii, hammerstein, learned };
    using Evaluator = std::function<SampledFunction(const SampledFunction&)>;

    static OperatorHandle zero() { return OperatorHandle(Kind::zero); }
    static OperatorHandle identity() { return OperatorHandle(Kind::identity); }
    static OperatorHandle fredholm(Kernel kernel, double lambda) {
        OperatorHandle op(Kind::fredholm);
        op.kernel_ = kernel;
        op.lambda_ = lambda;
        return op;
    }
    static OperatorHandle nemytskii(Nonlinearity g) {
        OperatorHandle op(Kind::nemytskii);
        op.nonlinearity_ = g;
        return op;
    }
    static OperatorHandle hammerstein(Kernel kernel, Nonlinearity g, double lambda) {
        OperatorHandle op(Kind::hammerstein);
        op.kernel_ = kernel;
        op.nonlinearity_ = g;
        op.lambda_ = lambda;
        return op;
    }
    static OperatorHandle learned(std::string name, Evaluator evaluator) {
        OperatorHandle op(Kind::learned);
        op.name_ = std::move(name);
        op.evaluator_ = std::make_shared<const Evaluator>(std::move(evaluator));
        return op;
    }

    Kind kind() const noexcept { return kind_; }
    const Kernel& kernel() const noexcept { return kernel_; }
    double lambda() const noexcept { return lambda_; }
    Nonlinearity nonlinearity() const noexcept { return nonlinearity_; }

    /// True when T is linear in its argument.
    bool is_linear() const noexcept {
        return kind_ == Kind::zero || kind_ == Kind::identity || kind_ == Kind::fredholm ||
               ((kind_ == Kind::nemytskii || kind_ == Kind::hammerstein) && nonlinearity_ == Nonlinearity::identity);
    }

    SampledFunction operator()(const SampledFunction& f) const {
        switch (kind_) {
        case Kind::zero: return SampledFunction::constant(f.quadrature(), 0.0);
        case Kind::identity: return f;
        case Kind::fredholm: return fredholm_apply(kernel_, lambda_, f);
        case Kind::nemytskii: return nemytskii_apply(nonlinearity_, f);
        case Kind::hammerstein: return hammerstein_apply(kernel_, nonlinearity_, lambda_, f);
        case Kind::learned: {
            auto out = (*evaluator_)(f);
            require(out.shares_quadrature(f), ErrorKind::usage, "learned operator changed the quadrature");
            return out;
        }
        }
        return f;
    }

    std::string describe() const {
        switch (kind_) {
        case Kind::zero: return "zero";
        case Kind::identity: return "identity";
        case Kind::fredholm: return "fredholm " + kernel_.describe() + " lambda=" + std::to_string(lambda_);
        case Kind::nemytskii: return "nemytskii " + std::string(to_string(nonlinearity_));
        case Kind::hammerstein:
            return "hammerstein " + kernel_.describe() + " " + std::string(to_string(nonlinearity_)) +
                   " lambda=" + std::to_string(lambda_);
        case Kind::learned: return "learned " + name_;
        }
        return "?";
    }

private:
    explicit OperatorHandle(Kind kind) : kind_(kind) {}

    Kind kind_;
    Kernel kernel_{};
    double lambda_ = 0.0;
    Nonlinearity nonlinearity_ = Nonlinearity::identity;
    std::string name_;
    std::shared_ptr<const Evaluator> evaluator_;
};

} // namespace projop
