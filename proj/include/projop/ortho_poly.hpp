#pragma once

/// Multivariate orthogonal polynomial bases on [-1,1]^d and the linear projection
///
///     P_n f = sum_{k<=n} L(f p_k) / L(p_k^2) * p_k,    L(g) = int g rho dmu.
///
/// Polynomials are kept as monomial-coefficient tables over a graded-lexicographic
/// monomial list (the source of truth) and as samples on a reference quadrature
/// (used for every integral).

#include "projop/error.hpp"
#include "projop/function_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace projop {

using MultiIndex = std::vector<int>;

/// Grid density per axis used to estimate sup norms of basis polynomials.
inline constexpr int kSupNormGridPoints = 64;

/// Relative threshold below which L(r^2) is treated as zero during Gram-Schmidt.
inline constexpr double kDegeneracyThreshold = 1e-10;

inline int total_degree(const MultiIndex& a) {
    int s = 0;
    for (int e : a) s += e;
    return s;
}

/// All multi-indices in d variables with total degree <= max_degree, graded
/// lexicographic: by total degree, then larger leading exponents first.
/// For d = 2: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) ...
inline std::vector<MultiIndex> graded_multi_indices(int d, int max_degree) {
    require(d >= 1 && max_degree >= 0, ErrorKind::usage, "graded_multi_indices needs d >= 1 and degree >= 0");
    std::vector<MultiIndex> out;
    MultiIndex current(static_cast<std::size_t>(d), 0);
    auto fill = [&](auto&& self, std::size_t axis, int remaining) -> void {
        if (axis + 1 == current.size()) {
            current[axis] = remaining;
            out.push_back(current);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            current[axis] = e;
            self(self, axis + 1, remaining - e);
        }
    };
    for (int degree = 0; degree <= max_degree; ++degree) fill(fill, 0, degree);
    return out;
}

/// Evaluates sum_j coeffs[j] * x^monomials[j] at one point.
inline double evaluate_monomials(const std::vector<MultiIndex>& monomials, const std::vector<double>& coeffs,
                                 std::span<const double> x) {
    double sum = 0.0;
    for (std::size_t j = 0; j < monomials.size(); ++j) {
        if (coeffs[j] == 0.0) continue;
        double term = coeffs[j];
        for (std::size_t a = 0; a < x.size(); ++a)
            for (int e = 0; e < monomials[j][a]; ++e) term *= x[a];
        sum += term;
    }
    return sum;
}

/// Samples of every monomial on every node, row-major [monomial][node].
inline std::vector<std::vector<double>> monomial_samples(const std::vector<MultiIndex>& monomials,
                                                         const Quadrature& quad) {
    const int max_degree = monomials.empty() ? 0 : total_degree(monomials.back());
    const auto d = static_cast<std::size_t>(quad.dimension());
    std::vector<std::vector<double>> out(monomials.size(), std::vector<double>(quad.size()));
    std::vector<double> powers(d * static_cast<std::size_t>(max_degree + 1));
    for (std::size_t i = 0; i < quad.size(); ++i) {
        const auto x = quad.node(i);
        for (std::size_t a = 0; a < d; ++a) {
            double v = 1.0;
            for (int e = 0; e <= max_degree; ++e) {
                powers[a * static_cast<std::size_t>(max_degree + 1) + static_cast<std::size_t>(e)] = v;
                v *= x[a];
            }
        }
        for (std::size_t j = 0; j < monomials.size(); ++j) {
            double v = 1.0;
            for (std::size_t a = 0; a < d; ++a)
                v *= powers[a * static_cast<std::size_t>(max_degree + 1) + static_cast<std::size_t>(monomials[j][a])];
            out[j][i] = v;
        }
    }
    return out;
}

/// L(f) = int f rho dmu for a weight rho in L^q, 1/p + 1/q = 1.
class WeightFunctional {
public:
    WeightFunctional(SampledFunction rho, PNorm norm) : rho_(std::move(rho)), norm_(norm) {
        norm_bound_ = detail::power_norm(rho_.values(), rho_.quadrature()->weights(), norm_.conjugate());
        require(std::isfinite(norm_bound_), ErrorKind::domain, "weight function has no finite L^q norm");
    }

    static WeightFunctional uniform(const QuadraturePtr& quad, PNorm norm = PNorm(2.0)) {
        return {SampledFunction::constant(quad, 1.0), norm};
    }

    const SampledFunction& rho() const noexcept { return rho_; }
    PNorm norm() const noexcept { return norm_; }
    double conjugate_exponent() const noexcept { return norm_.conjugate(); }
    /// ||L|| = ||rho||_q.
    double norm_bound() const noexcept { return norm_bound_; }

    double operator()(const SampledFunction& f) const { return integrate_against(f, rho_); }

    /// L(f g) without materializing the product.
    double pair(std::span<const double> f, std::span<const double> g) const {
        const auto w = rho_.quadrature()->weights();
        const auto r = rho_.values();
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * f[i] * g[i] * r[i];
        return sum;
    }

private:
    SampledFunction rho_;
    PNorm norm_;
    double norm_bound_;
};

inline double functional_eval(const WeightFunctional& functional, const SampledFunction& f) { return functional(f); }

/// Ordered polynomials p_0..p_N orthogonal under a weight functional.
class OrthoPolyBasis {
public:
    OrthoPolyBasis(int dimension, int max_degree, std::string kind, WeightFunctional functional,
                   std::vector<MultiIndex> monomials, std::vector<std::vector<double>> coefficients,
                   std::vector<SampledFunction> samples, std::vector<double> gram)
        : dimension_(dimension), max_degree_(max_degree), kind_(std::move(kind)), functional_(std::move(functional)),
          monomials_(std::move(monomials)), coefficients_(std::move(coefficients)), samples_(std::move(samples)),
          gram_(std::move(gram)) {}

    int dimension() const noexcept { return dimension_; }
    int max_degree() const noexcept { return max_degree_; }
    const std::string& kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return samples_.size(); }
    const WeightFunctional& functional() const noexcept { return functional_; }
    const QuadraturePtr& quadrature() const noexcept { return functional_.rho().quadrature(); }

    /// Graded-lex monomials shared by every coefficient table; monomials()[k] is the leading term of p_k.
    const std::vector<MultiIndex>& monomials() const noexcept { return monomials_; }
    const MultiIndex& multi_index(std::size_t k) const { return monomials_.at(k); }
    const std::vector<double>& coefficients(std::size_t k) const { return coefficients_.at(k); }
    const SampledFunction& polynomial(std::size_t k) const { return samples_.at(k); }
    /// L(p_k^2); may be negative for sign-changing weights.
    double gram(std::size_t k) const { return gram_.at(k); }
    const std::vector<double>& gram_values() const noexcept { return gram_; }

    double evaluate(std::size_t k, std::span<const double> x) const {
        return evaluate_monomials(monomials_, coefficients_.at(k), x);
    }

private:
    int dimension_;
    int max_degree_;
    std::string kind_;
    WeightFunctional functional_;
    std::vector<MultiIndex> monomials_;
    std::vector<std::vector<double>> coefficients_;
    std::vector<SampledFunction> samples_;
    std::vector<double> gram_;
};

using BasisPtr = std::shared_ptr<const OrthoPolyBasis>;

namespace detail {

inline void check_basis_quadrature(int d, int max_degree, const Quadrature& quad) {
    require(quad.dimension() == d, ErrorKind::usage,
            "quadrature dimension " + std::to_string(quad.dimension()) + " does not match basis dimension " +
                std::to_string(d));
    require(max_degree >= 0, ErrorKind::usage, "max_total_degree must be nonnegative");
    require(quad.points_per_axis() >= max_degree + 1, ErrorKind::usage,
            "quadrature is not exact for degree " + std::to_string(2 * max_degree) + ": need points_per_axis >= " +
                std::to_string(max_degree + 1) + ", got " + std::to_string(quad.points_per_axis()));
}

/// Monomial coefficients of the orthonormal Legendre polynomials sqrt(2k+1) P_k, k <= degree.
inline std::vector<std::vector<double>> normalized_legendre_1d(int degree) {
    std::vector<std::vector<double>> p(static_cast<std::size_t>(degree + 1),
                                       std::vector<double>(static_cast<std::size_t>(degree + 1), 0.0));
    p[0][0] = 1.0;
    if (degree >= 1) p[1][1] = 1.0;
    for (int k = 1; k < degree; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double kd = k;
        for (std::size_t j = 0; j <= ku + 1; ++j) {
            const double shifted = j > 0 ? p[ku][j - 1] : 0.0;
            p[ku + 1][j] = ((2.0 * kd + 1.0) * shifted - kd * p[ku - 1][j]) / (kd + 1.0);
        }
    }
    for (int k = 0; k <= degree; ++k)
        for (auto& c : p[static_cast<std::size_t>(k)]) c *= std::sqrt(2.0 * k + 1.0);
    return p;
}

inline std::vector<double> combine_samples(const std::vector<std::vector<double>>& monomial_values,
                                           const std::vector<double>& coeffs) {
    std::vector<double> out(monomial_values.front().size(), 0.0);
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        if (coeffs[j] == 0.0) continue;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[j] * monomial_values[j][i];
    }
    return out;
}

} // namespace detail

/// Tensor products of orthonormal Legendre polynomials with total degree <= max_total_degree,
/// orthonormal under the uniform weight.
inline OrthoPolyBasis tensor_legendre(int d, int max_total_degree, const QuadraturePtr& quad,
                                      PNorm norm = PNorm(2.0)) {
    detail::check_basis_quadrature(d, max_total_degree, *quad);
    auto monomials = graded_multi_indices(d, max_total_degree);
    std::map<MultiIndex, std::size_t> position;
    for (std::size_t j = 0; j < monomials.size(); ++j) position.emplace(monomials[j], j);
    const auto legendre = detail::normalized_legendre_1d(max_total_degree);
    const auto monomial_values = monomial_samples(monomials, *quad);
    WeightFunctional functional = WeightFunctional::uniform(quad, norm);

    std::vector<std::vector<double>> coefficients;
    std::vector<SampledFunction> samples;
    std::vector<double> gram;
    for (const auto& a : monomials) {
        std::vector<double> coeffs(monomials.size(), 0.0);
        // expand prod_j L_{a_j}(x_j) over sub-multi-indices b <= a
        MultiIndex b(static_cast<std::size_t>(d), 0);
        auto expand = [&](auto&& self, std::size_t axis, double c) -> void {
            if (axis == b.size()) {
                coeffs[position.at(b)] += c;
                return;
            }
            const auto& row = legendre[static_cast<std::size_t>(a[axis])];
            for (int e = 0; e <= a[axis]; ++e) {
                const double ce = row[static_cast<std::size_t>(e)];
                if (ce == 0.0) continue;
                b[axis] = e;
                self(self, axis + 1, c * ce);
            }
            b[axis] = 0;
        };
        expand(expand, 0, 1.0);
        SampledFunction s(quad, detail::combine_samples(monomial_values, coeffs));
        gram.push_back(functional.pair(s.values(), s.values()));
        coefficients.push_back(std::move(coeffs));
        samples.push_back(std::move(s));
    }
    return {d,
            max_total_degree,
            "legendre",
            std::move(functional),
            std::move(monomials),
            std::move(coefficients),
            std::move(samples),
            std::move(gram)};
}

/// Orthogonalizes the graded-lex monomials against L(fg) = int f g rho dmu.
///
/// Each polynomial is scaled so |L(p_k^2)| = 1 with the sign of L kept. A direction
/// whose remainder has |L(r^2)| < 1e-10 * int m^2 |rho| dmu raises a degeneracy error.
inline OrthoPolyBasis gram_schmidt(int d, int max_total_degree, const WeightFunctional& functional,
                                   const QuadraturePtr& quad) {
    detail::check_basis_quadrature(d, max_total_degree, *quad);
    require(functional.rho().quadrature()->same_as(*quad), ErrorKind::usage,
            "weight functional lives on a different quadrature");
    auto monomials = graded_multi_indices(d, max_total_degree);
    const auto monomial_values = monomial_samples(monomials, *quad);
    const auto nodes = quad->size();
    const auto abs_rho = [&] {
        std::vector<double> r(functional.rho().values().begin(), functional.rho().values().end());
        for (auto& v : r) v = std::abs(v);
        return r;
    }();

    std::vector<std::vector<double>> coefficients;
    std::vector<std::vector<double>> values;
    std::vector<double> gram;
    for (std::size_t k = 0; k < monomials.size(); ++k) {
        std::vector<double> coeffs(monomials.size(), 0.0);
        coeffs[k] = 1.0;
        std::vector<double> r = monomial_values[k];
        double scale = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) scale += quad->weights()[i] * r[i] * r[i] * abs_rho[i];

        // two passes of modified Gram-Schmidt
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t j = 0; j < k; ++j) {
                const double c = functional.pair(r, values[j]) / gram[j];
                for (std::size_t i = 0; i < nodes; ++i) r[i] -= c * values[j][i];
                for (std::size_t m = 0; m < coeffs.size(); ++m) coeffs[m] -= c * coefficients[j][m];
            }

        const double g = functional.pair(r, r);
        if (!(std::abs(g) >= kDegeneracyThreshold * scale) || scale == 0.0) {
            std::ostringstream msg;
            msg << "weight functional is degenerate at basis index " << k << " (monomial";
            for (int e : monomials[k]) msg << ' ' << e;
            msg << "): |L(r^2)| = " << std::abs(g) << " below " << kDegeneracyThreshold
                << " relative; retrain the weight or reduce the degree";
            fail(ErrorKind::degeneracy, msg.str());
        }
        const double s = 1.0 / std::sqrt(std::abs(g));
        for (auto& c : coeffs) c *= s;
        // samples are regenerated from the coefficient table, which is authoritative
        r = detail::combine_samples(monomial_values, coeffs);
        gram.push_back(functional.pair(r, r));
        coefficients.push_back(std::move(coeffs));
        values.push_back(std::move(r));
    }

    std::vector<SampledFunction> samples;
    samples.reserve(values.size());
    for (auto& v : values) samples.emplace_back(quad, std::move(v));
    return {d,
            max_total_degree,
            "gram-schmidt",
            functional,
            std::move(monomials),
            std::move(coefficients),
            std::move(samples),
            std::move(gram)};
}

/// Coefficients c_k = L(f p_k) / L(p_k^2) and the reconstruction sum_k c_k p_k.
struct Projection {
    std::vector<double> coefficients;
    SampledFunction function;
};

namespace detail {

inline void check_truncation(const OrthoPolyBasis& basis, std::size_t n) {
    require(n < basis.size(), ErrorKind::usage,
            "truncation index " + std::to_string(n) + " out of range for basis of size " +
                std::to_string(basis.size()));
}

} // namespace detail

inline SampledFunction reconstruct(const OrthoPolyBasis& basis, std::span<const double> coefficients) {
    require(coefficients.size() <= basis.size(), ErrorKind::usage, "more coefficients than basis polynomials");
    std::vector<double> values(basis.quadrature()->size(), 0.0);
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        const auto p = basis.polynomial(k).values();
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += coefficients[k] * p[i];
    }
    return {basis.quadrature(), std::move(values)};
}

/// phi_n(P_n f): the coordinates of the projection in the ordered basis.
inline std::vector<double> project_coefficients(const OrthoPolyBasis& basis, std::size_t n, const SampledFunction& f) {
    detail::check_truncation(basis, n);
    require(f.shares_quadrature(basis.polynomial(0)), ErrorKind::usage,
            "function and basis live on different quadratures");
    std::vector<double> c(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        c[k] = basis.functional().pair(f.values(), basis.polynomial(k).values()) / basis.gram(k);
    return c;
}

inline Projection project(const OrthoPolyBasis& basis, std::size_t n, const SampledFunction& f) {
    auto c = project_coefficients(basis, n, f);
    auto g = reconstruct(basis, c);
    return {std::move(c), std::move(g)};
}

/// Max of |p_k| over the equispaced grid with kSupNormGridPoints points per axis (endpoints included).
inline double sup_norm_estimate(const OrthoPolyBasis& basis, std::size_t k) {
    const auto d = static_cast<std::size_t>(basis.dimension());
    const int g = kSupNormGridPoints;
    std::vector<double> axis(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) axis[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (g - 1);
    std::vector<std::size_t> index(d, 0);
    std::vector<double> x(d);
    double best = 0.0;
    for (;;) {
        for (std::size_t a = 0; a < d; ++a) x[a] = axis[index[a]];
        best = std::max(best, std::abs(basis.evaluate(k, x)));
        std::size_t a = d;
        while (a-- > 0) {
            if (++index[a] < axis.size()) break;
            index[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) break;
    }
    return best;
}

/// Terms ||p_k||_inf ||p_k||_p / |L(p_k^2)| for k <= n.
inline std::vector<double> uniform_bound_terms(const OrthoPolyBasis& basis, std::size_t n) {
    detail::check_truncation(basis, n);
    std::vector<double> terms(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        terms[k] = sup_norm_estimate(basis, k) * lp_norm(basis.polynomial(k), basis.functional().norm()) /
                   std::abs(basis.gram(k));
    return terms;
}

/// ||rho||_q * sum_{k<=n} ||p_k||_inf ||p_k||_p / |L(p_k^2)|, an upper bound on ||P_n||.
inline double uniform_bound(const OrthoPolyBasis& basis, std::size_t n) {
    double sum = 0.0;
    for (double t : uniform_bound_terms(basis, n)) sum += t;
    return basis.functional().norm_bound() * sum;
}

/// B_0..B_n in one pass.
inline std::vector<double> uniform_bound_table(const OrthoPolyBasis& basis, std::size_t n) {
    const auto terms = uniform_bound_terms(basis, n);
    std::vector<double> table(terms.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        sum += terms[k];
        table[k] = basis.functional().norm_bound() * sum;
    }
    return table;
}

// ---------------------------------------------------------------------------
// Plain-text basis export
// ---------------------------------------------------------------------------

/// Row of an exported basis table.
struct BasisRow {
    std::size_t k = 0;
    MultiIndex multi_index;
    std::vector<double> coefficients;
    double gram = 0.0;
};

/// Basis table read back from an export; carries no quadrature.
struct BasisTable {
    int dimension = 0;
    int max_degree = 0;
    std::string kind;
    std::string weight;
    std::vector<MultiIndex> monomials;
    std::vector<BasisRow> rows;
};

/// Writes
///
///     # projop basis v1
///     dimension <d>
///     max_degree <D>
///     kind <legendre|gram-schmidt>
///     weight <uniform|sampled>
///     size <N+1>
///     monomials <a_1 ... a_d; ...>
///     k, multi-index, monomial coefficients, L(p_k^2)
///     0, 0 0, 1 0 0 ..., 1
///     ...
inline void write_basis(std::ostream& os, const OrthoPolyBasis& basis) {
    bool uniform = true;
    for (double r : basis.functional().rho().values()) uniform = uniform && r == 1.0;
    os.precision(17);
    os << "# projop basis v1\n"
       << "dimension " << basis.dimension() << '\n'
       << "max_degree " << basis.max_degree() << '\n'
       << "kind " << basis.kind() << '\n'
       << "weight " << (uniform ? "uniform" : "sampled") << '\n'
       << "size " << basis.size() << '\n'
       << "monomials";
    for (std::size_t j = 0; j < basis.monomials().size(); ++j) {
        os << (j ? ";" : " ");
        for (std::size_t a = 0; a < basis.monomials()[j].size(); ++a) os << (a ? " " : "") << basis.monomials()[j][a];
    }
    os << "\nk, multi-index, monomial coefficients, L(p_k^2)\n";
    for (std::size_t k = 0; k < basis.size(); ++k) {
        os << k << ", ";
        const auto& a = basis.multi_index(k);
        for (std::size_t j = 0; j < a.size(); ++j) os << (j ? " " : "") << a[j];
        os << ", ";
        const auto& c = basis.coefficients(k);
        for (std::size_t j = 0; j < c.size(); ++j) os << (j ? " " : "") << c[j];
        os << ", " << basis.gram(k) << '\n';
    }
}

inline BasisTable read_basis(std::istream& is) {
    auto bad = [](const std::string& what) { fail(ErrorKind::usage, "basis file: " + what); };
    std::string line;
    if (!std::getline(is, line) || line != "# projop basis v1") bad("missing '# projop basis v1' header");
    BasisTable table;
    auto header = [&](const std::string& key) {
        if (!std::getline(is, line)) bad("truncated header");
        std::istringstream ls(line);
        std::string k, value;
        ls >> k;
        std::getline(ls >> std::ws, value);
        if (k != key) bad("expected '" + key + "', got '" + k + "'");
        return value;
    };
    try {
        table.dimension = std::stoi(header("dimension"));
        table.max_degree = std::stoi(header("max_degree"));
        table.kind = header("kind");
        table.weight = header("weight");
        const auto size = static_cast<std::size_t>(std::stoul(header("size")));
        std::istringstream ms(header("monomials"));
        std::string item;
        while (std::getline(ms, item, ';')) {
            std::istringstream is_item(item);
            MultiIndex a;
            int e = 0;
            while (is_item >> e) a.push_back(e);
            if (a.size() != static_cast<std::size_t>(table.dimension)) bad("monomial has wrong arity");
            table.monomials.push_back(std::move(a));
        }
        if (!std::getline(is, line) || line != "k, multi-index, monomial coefficients, L(p_k^2)")
            bad("missing column header");
        for (std::size_t r = 0; r < size; ++r) {
            if (!std::getline(is, line)) bad("truncated at row " + std::to_string(r));
            std::vector<std::string> fields;
            std::istringstream ls(line);
            std::string f;
            while (std::getline(ls, f, ',')) fields.push_back(f);
            if (fields.size() != 4) bad("row " + std::to_string(r) + " needs 4 comma-separated fields");
            BasisRow row;
            row.k = static_cast<std::size_t>(std::stoul(fields[0]));
            std::istringstream mi(fields[1]);
            int e = 0;
            while (mi >> e) row.multi_index.push_back(e);
            std::istringstream cs(fields[2]);
            double c = 0.0;
            while (cs >> c) row.coefficients.push_back(c);
            row.gram = std::stod(fields[3]);
            if (row.coefficients.size() != table.monomials.size()) bad("row " + std::to_string(r) + " coefficient count");
            table.rows.push_back(std::move(row));
        }
    } catch (const std::logic_error&) {
        bad("malformed number");
    }
    return table;
}

} // namespace projop
