#pragma once

/// Leray-Schauder projections on finite samples of a compact set.
///
/// Given centers x_1..x_n and a radius eps, the hat weights
/// mu_i(x) = max(eps - ||x - x_i||, 0) define the nonlinear map
///
///     P x = sum_i mu_i(x) x_i / sum_j mu_j(x),
///
/// which is continuous and moves every covered point by strictly less than eps.
/// greedy_net builds a separated net (pairwise distances >= eps), on which P
/// fixes each center.

#include "projop/error.hpp"
#include "projop/function_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace projop {

/// Finite sample K of a compact subset of L^p_mu(S).
class CompactSampleSet {
public:
    CompactSampleSet(std::vector<SampledFunction> members, PNorm norm) : members_(std::move(members)), norm_(norm) {
        require(!members_.empty(), ErrorKind::usage, "compact sample set must be nonempty");
        for (const auto& m : members_)
            require(m.shares_quadrature(members_.front()), ErrorKind::usage,
                    "compact sample set members must share one quadrature");
    }

    const std::vector<SampledFunction>& members() const noexcept { return members_; }
    PNorm norm() const noexcept { return norm_; }
    std::size_t size() const noexcept { return members_.size(); }

private:
    std::vector<SampledFunction> members_;
    PNorm norm_;
};

class LerayProjector {
public:
    /// Builds a projector from explicit centers. With require_separation the
    /// centers must be pairwise at least eps - 1e-12 apart.
    LerayProjector(std::vector<SampledFunction> centers, double epsilon, PNorm norm, bool require_separation = true)
        : centers_(std::move(centers)), epsilon_(epsilon), norm_(norm), separated_(require_separation) {
        require(!centers_.empty(), ErrorKind::usage, "Leray-Schauder projector needs at least one center");
        require(std::isfinite(epsilon_) && epsilon_ > 0.0, ErrorKind::usage, "epsilon must be positive and finite");
        for (const auto& c : centers_)
            require(c.shares_quadrature(centers_.front()), ErrorKind::usage, "centers must share one quadrature");
        if (separated_) {
            const auto [i, j, gap] = closest_pair();
            require(centers_.size() < 2 || gap >= epsilon_ - 1e-12, ErrorKind::usage,
                    "centers " + std::to_string(i) + " and " + std::to_string(j) + " are closer than epsilon (" +
                        std::to_string(gap) + " < " + std::to_string(epsilon_) + ")");
        }
    }

    const std::vector<SampledFunction>& centers() const noexcept { return centers_; }
    double epsilon() const noexcept { return epsilon_; }
    PNorm norm() const noexcept { return norm_; }
    bool separated() const noexcept { return separated_; }
    const QuadraturePtr& quadrature() const noexcept { return centers_.front().quadrature(); }

    /// Indices and distance of the closest pair of centers; infinity when there is one center.
    std::tuple<std::size_t, std::size_t, double> closest_pair() const {
        std::tuple<std::size_t, std::size_t, double> best{0, 0, std::numeric_limits<double>::infinity()};
        for (std::size_t i = 0; i < centers_.size(); ++i)
            for (std::size_t j = i + 1; j < centers_.size(); ++j) {
                const double d = distance(centers_[i], centers_[j], norm_);
                if (d < std::get<2>(best)) best = {i, j, d};
            }
        return best;
    }

private:
    std::vector<SampledFunction> centers_;
    double epsilon_;
    PNorm norm_;
    bool separated_;
};

/// Deterministic greedy separated eps-net: the first member becomes a center,
/// then each member not strictly within eps of an existing center becomes one.
inline LerayProjector greedy_net(const CompactSampleSet& set, double epsilon) {
    require(std::isfinite(epsilon) && epsilon > 0.0, ErrorKind::usage, "epsilon must be positive and finite");
    std::vector<SampledFunction> centers;
    for (const auto& x : set.members()) {
        bool covered = false;
        for (const auto& c : centers)
            if (distance(x, c, set.norm()) < epsilon) {
                covered = true;
                break;
            }
        if (!covered) centers.push_back(x);
    }
    return {std::move(centers), epsilon, set.norm(), true};
}

/// mu_i(x) = max(eps - ||x - x_i||, 0), in center order.
inline std::vector<double> hat_coefficients(const LerayProjector& proj, const SampledFunction& x) {
    std::vector<double> mu;
    mu.reserve(proj.centers().size());
    for (const auto& c : proj.centers()) mu.push_back(std::max(proj.epsilon() - distance(x, c, proj.norm()), 0.0));
    return mu;
}

/// Barycentric coordinates mu_i(x) / sum_j mu_j(x) of P x in the center frame.
inline std::vector<double> ls_coordinates(const LerayProjector& proj, const SampledFunction& x) {
    auto mu = hat_coefficients(proj, x);
    double total = 0.0;
    for (double m : mu) total += m;
    if (!(total > 0.0))
        fail(ErrorKind::coverage, "x not within epsilon of the net (epsilon = " + std::to_string(proj.epsilon()) +
                                      "); rebuild with a larger epsilon or a denser net");
    for (auto& m : mu) m /= total;
    return mu;
}

/// Combination of the centers with the given coordinates.
inline SampledFunction combine_centers(const LerayProjector& proj, const std::vector<double>& coords) {
    require(coords.size() == proj.centers().size(), ErrorKind::usage, "coordinate count must equal center count");
    std::vector<double> values(proj.quadrature()->size(), 0.0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i] == 0.0) continue;
        const auto c = proj.centers()[i].values();
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += coords[i] * c[k];
    }
    return {proj.quadrature(), std::move(values)};
}

inline SampledFunction ls_project(const LerayProjector& proj, const SampledFunction& x) {
    const auto coords = ls_coordinates(proj, x);
    // a single active hat reproduces its center exactly
    for (std::size_t i = 0; i < coords.size(); ++i)
        if (coords[i] == 1.0) return proj.centers()[i];
    return combine_centers(proj, coords);
}

/// Result of re-checking a net against its radius.
struct NetCheck {
    bool separated = true;
    double min_gap = std::numeric_limits<double>::infinity();
    std::size_t first = 0;
    std::size_t second = 0;
};

inline NetCheck check_separation(const LerayProjector& proj, double epsilon) {
    NetCheck result;
    if (proj.centers().size() < 2) return result;
    const auto [i, j, gap] = proj.closest_pair();
    result.min_gap = gap;
    result.first = i;
    result.second = j;
    result.separated = gap >= epsilon - 1e-12;
    return result;
}

/// Writes the projector as a plain-text centers file:
///
///     # projop centers v1
///     dimension <d>
///     points <points_per_axis>
///     p <exponent>
///     epsilon <eps>
///     separated <0|1>
///     centers <count>
///     <one line per center: space separated samples>
inline void write_projector(std::ostream& os, const LerayProjector& proj) {
    const auto& quad = *proj.quadrature();
    os.precision(17);
    os << "# projop centers v1\n"
       << "dimension " << quad.dimension() << '\n'
       << "points " << quad.points_per_axis() << '\n'
       << "p " << proj.norm().p() << '\n'
       << "epsilon " << proj.epsilon() << '\n'
       << "separated " << (proj.separated() ? 1 : 0) << '\n'
       << "centers " << proj.centers().size() << '\n';
    for (const auto& c : proj.centers()) {
        const auto v = c.values();
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
        os << '\n';
    }
}

/// Reads a centers file. Separation is not re-validated here; use check_separation.
inline LerayProjector read_projector(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)) && line == "# projop centers v1", ErrorKind::usage,
            "not a projop centers file (missing '# projop centers v1' header)");
    auto field = [&](const std::string& name) {
        std::string key;
        double value = 0.0;
        require(static_cast<bool>(is >> key >> value) && key == name, ErrorKind::usage,
                "centers file: expected field '" + name + "'");
        return value;
    };
    const int d = static_cast<int>(field("dimension"));
    const int points = static_cast<int>(field("points"));
    const double p = field("p");
    const double eps = field("epsilon");
    field("separated");
    const auto count = static_cast<std::size_t>(field("centers"));
    auto quad = build_quadrature(d, points);
    std::vector<SampledFunction> centers;
    for (std::size_t c = 0; c < count; ++c) {
        std::vector<double> values(quad->size());
        for (auto& v : values) require(static_cast<bool>(is >> v), ErrorKind::usage, "centers file truncated");
        centers.emplace_back(quad, std::move(values));
    }
    return {std::move(centers), eps, PNorm(p), false};
}

} // namespace projop
