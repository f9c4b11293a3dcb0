#pragma once

/// Galerkin solution of the projected equation P_n T(x) + P_n f = x on span(p_0..p_n),
/// by Picard or damped Newton iteration on coefficient vectors.

#include "projop/error.hpp"
#include "projop/format.hpp"
#include "projop/function_space.hpp"
#include "projop/operator_zoo.hpp"
#include "projop/ortho_poly.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace projop {

enum class SolveMethod { picard, newton };

inline std::optional<SolveMethod> parse_solve_method(std::string_view name) {
    if (name == "picard") return SolveMethod::picard;
    if (name == "newton") return SolveMethod::newton;
    return std::nullopt;
}

inline std::string_view to_string(SolveMethod m) { return m == SolveMethod::picard ? "picard" : "newton"; }

/// Condition estimate above which the Newton Jacobian is treated as singular.
inline constexpr double kMaxJacobianCondition = 1e14;

class ProjectedEquation {
public:
    ProjectedEquation(OperatorHandle op, SampledFunction forcing, BasisPtr basis, std::size_t n)
        : op_(std::move(op)), forcing_(std::move(forcing)), basis_(std::move(basis)), n_(n),
          forcing_coefficients_(project_coefficients(*basis_, n_, forcing_)) {}

    const OperatorHandle& op() const noexcept { return op_; }
    const SampledFunction& forcing() const noexcept { return forcing_; }
    const OrthoPolyBasis& basis() const noexcept { return *basis_; }
    const BasisPtr& basis_ptr() const noexcept { return basis_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t unknowns() const noexcept { return n_ + 1; }

    /// phi_n(P_n f).
    const std::vector<double>& forcing_coefficients() const noexcept { return forcing_coefficients_; }

    /// phi_n(P_n T(phi_n^{-1} c) + P_n f).
    std::vector<double> map(std::span<const double> c) const {
        require(c.size() == unknowns(), ErrorKind::usage,
                "coefficient vector has length " + std::to_string(c.size()) + ", expected n+1 = " +
                    std::to_string(unknowns()));
        auto out = project_coefficients(*basis_, n_, op_(reconstruct(*basis_, c)));
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += forcing_coefficients_[k];
        return out;
    }

    SampledFunction solution(std::span<const double> c) const { return reconstruct(*basis_, c); }

private:
    OperatorHandle op_;
    SampledFunction forcing_;
    BasisPtr basis_;
    std::size_t n_;
    std::vector<double> forcing_coefficients_;
};

/// c - phi_n(P_n T(phi_n^{-1} c) + P_n f).
inline std::vector<double> residual(const ProjectedEquation& eq, std::span<const double> c) {
    auto r = eq.map(c);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = c[k] - r[k];
    return r;
}

inline double euclidean_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct SolveReport {
    std::vector<double> coefficients;
    std::optional<SampledFunction> solution;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    SolveMethod method = SolveMethod::picard;
};

/// Called with the iteration index and the current iterate (before the convergence test).
using IterateObserver = std::function<void(int, std::span<const double>)>;

namespace detail {

inline void require_finite_iterate(std::span<const double> c, int iteration) {
    for (double v : c)
        if (!std::isfinite(v))
            fail(ErrorKind::divergence, "iterate became non-finite at iteration " + std::to_string(iteration));
}

/// Residual with operator domain failures (overflow in a nonlinearity) reported as divergence.
inline std::vector<double> guarded_residual(const ProjectedEquation& eq, std::span<const double> c, int iteration) {
    require_finite_iterate(c, iteration);
    try {
        return residual(eq, c);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::domain) throw;
        fail(ErrorKind::divergence, "operator evaluation failed at iteration " + std::to_string(iteration) + ": " +
                                        e.what());
    }
}

inline void check_solve_args(const ProjectedEquation& eq, std::span<const double> c0, double tol, int max_iter) {
    require(std::isfinite(tol) && tol > 0.0, ErrorKind::usage, "tol must be positive");
    require(max_iter >= 0, ErrorKind::usage, "max_iter must be nonnegative");
    require(c0.size() == eq.unknowns(), ErrorKind::usage, "initial guess must have length n+1");
}

inline SolveReport finish(const ProjectedEquation& eq, std::vector<double> c, int iterations, double res,
                          double tol, SolveMethod method) {
    SolveReport report;
    report.solution = eq.solution(c);
    report.coefficients = std::move(c);
    report.iterations = iterations;
    report.residual = res;
    report.converged = res < tol;
    report.method = method;
    return report;
}

} // namespace detail

/// c <- phi_n(P_n T(phi^{-1} c) + f_n) until ||residual|| < tol or max_iter steps.
/// Non-convergence is reported, not thrown.
inline SolveReport picard_solve(const ProjectedEquation& eq, std::span<const double> c0, double tol, int max_iter,
                                const IterateObserver& observe = {}) {
    detail::check_solve_args(eq, c0, tol, max_iter);
    std::vector<double> c(c0.begin(), c0.end());
    for (int it = 0;; ++it) {
        if (observe) observe(it, c);
        const auto r = detail::guarded_residual(eq, c, it);
        const double res = euclidean_norm(r);
        if (res < tol || it == max_iter) return detail::finish(eq, std::move(c), it, res, tol, SolveMethod::picard);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] -= r[k];
    }
}

namespace detail {

/// Forward-difference Jacobian of the residual, step 1e-6 * max(1, |c_j|).
inline Eigen::MatrixXd residual_jacobian(const ProjectedEquation& eq, const std::vector<double>& c,
                                         const std::vector<double>& r0, int iteration) {
    const auto size = static_cast<Eigen::Index>(c.size());
    Eigen::MatrixXd jac(size, size);
    std::vector<double> probe = c;
    for (Eigen::Index j = 0; j < size; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const double h = 1e-6 * std::max(1.0, std::abs(c[uj]));
        probe[uj] = c[uj] + h;
        const double step = probe[uj] - c[uj];
        const auto r = guarded_residual(eq, probe, iteration);
        for (Eigen::Index i = 0; i < size; ++i) jac(i, j) = (r[static_cast<std::size_t>(i)] - r0[static_cast<std::size_t>(i)]) / step;
        probe[uj] = c[uj];
    }
    return jac;
}

} // namespace detail

/// Damped Newton on the residual with a finite-difference Jacobian and backtracking
/// (halving down to 2^-10) on the residual norm.
inline SolveReport newton_solve(const ProjectedEquation& eq, std::span<const double> c0, double tol, int max_iter,
                                const IterateObserver& observe = {}) {
    detail::check_solve_args(eq, c0, tol, max_iter);
    std::vector<double> c(c0.begin(), c0.end());
    auto r = detail::guarded_residual(eq, c, 0);
    double res = euclidean_norm(r);
    for (int it = 0;; ++it) {
        if (observe) observe(it, c);
        if (res < tol || it == max_iter) return detail::finish(eq, std::move(c), it, res, tol, SolveMethod::newton);

        const Eigen::MatrixXd jac = detail::residual_jacobian(eq, c, r, it);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double smax = sv(0), smin = sv(sv.size() - 1);
        if (!(smin > 0.0) || smax / smin > kMaxJacobianCondition)
            fail(ErrorKind::singular, "Newton Jacobian is singular at iteration " + std::to_string(it) +
                                          " (condition estimate " + std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
        const Eigen::VectorXd delta = svd.solve(-Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));

        double t = 1.0;
        std::vector<double> trial(c.size()), trial_r;
        double trial_res = 0.0;
        for (;;) {
            for (std::size_t k = 0; k < c.size(); ++k) trial[k] = c[k] + t * delta(static_cast<Eigen::Index>(k));
            trial_r = detail::guarded_residual(eq, trial, it + 1);
            trial_res = euclidean_norm(trial_r);
            if (trial_res < (1.0 - 1e-4 * t) * res || t <= 1.0 / 1024.0) break;
            t *= 0.5;
        }
        c.swap(trial);
        r.swap(trial_r);
        res = trial_res;
    }
}

inline SolveReport solve(const ProjectedEquation& eq, std::span<const double> c0, double tol, int max_iter,
                         SolveMethod method) {
    return method == SolveMethod::picard ? picard_solve(eq, c0, tol, max_iter) : newton_solve(eq, c0, tol, max_iter);
}

/// x = f + lambda a c with c = int(b f) / (1 - lambda int(a b)); the integrals use a
/// Gauss rule with reference_points per axis, the result is sampled on quad.
inline SampledFunction separable_reference_solution(Field a, Field b, double lambda, Field f, const QuadraturePtr& quad,
                                                    int reference_points = 64) {
    auto fine = build_quadrature(quad->dimension(), reference_points);
    const auto af = sample(fine, a), bf = sample(fine, b), ff = sample(fine, f);
    const double denominator = 1.0 - lambda * integrate_against(af, bf);
    require(std::abs(denominator) >= 1e-12, ErrorKind::singular, "resonant lambda in the reference solution");
    const double c = integrate_against(bf, ff) / denominator;
    return sample(quad, f) + (lambda * c) * sample(quad, a);
}

struct StudyRow {
    std::size_t n = 0;
    SolveMethod method = SolveMethod::picard;
    int iterations = 0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> error;  // absent for the reference row or a failed solve
    bool converged = false;
    double uniform_bound = 0.0;
    std::string failure;  // error message when the solve raised
};

struct StudyConfig {
    SolveMethod method = SolveMethod::picard;
    double tol = 1e-12;
    int max_iter = 200;
};

/// Solves the projected equation for each n and measures the L^2 error against the
/// reference. Without a reference, the largest-n solve is used and its row carries no error.
inline std::vector<StudyRow> convergence_study(const OperatorHandle& op, const SampledFunction& f, const BasisPtr& basis,
                                               const std::vector<std::size_t>& n_list, const StudyConfig& cfg,
                                               std::optional<SampledFunction> reference = std::nullopt) {
    require(!n_list.empty(), ErrorKind::usage, "n_list is empty");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        require(n_list[i] > n_list[i - 1], ErrorKind::usage, "n_list must be strictly increasing");
    const PNorm l2(2.0);

    std::vector<StudyRow> rows;
    std::vector<std::optional<SampledFunction>> solutions;
    for (std::size_t n : n_list) {
        StudyRow row;
        row.n = n;
        row.method = cfg.method;
        try {
            ProjectedEquation eq(op, f, basis, n);
            const std::vector<double> c0(n + 1, 0.0);
            auto report = solve(eq, c0, cfg.tol, cfg.max_iter, cfg.method);
            row.iterations = report.iterations;
            row.residual = report.residual;
            row.converged = report.converged;
            row.uniform_bound = uniform_bound(*basis, n);
            solutions.push_back(std::move(report.solution));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::usage) throw;
            row.failure = std::string(to_string(e.kind())) + ": " + e.what();
            solutions.emplace_back();
        }
        rows.push_back(std::move(row));
    }

    const bool self_reference = !reference.has_value();
    if (self_reference) reference = solutions.back();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!solutions[i] || !reference) continue;
        if (self_reference && i + 1 == rows.size()) continue;
        rows[i].error = distance(*solutions[i], *reference, l2);
    }
    return rows;
}

/// CSV with header n,method,iterations,residual,error,converged; numbers at 17 significant digits.
inline void write_study_csv(std::ostream& os, const std::vector<StudyRow>& rows) {
    os << "n,method,iterations,residual,error,converged\n";
    for (const auto& r : rows) {
        os << r.n << ',' << to_string(r.method) << ',' << r.iterations << ',' << format_real(r.residual)
           << ',' << (r.error ? format_real(*r.error) : "") << ',' << (r.converged ? "true" : "false") << '\n';
    }
}

} // namespace projop
