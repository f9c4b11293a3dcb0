#pragma once

/// Declarative experiments: a line-oriented `key = value` config, a runner that
/// produces every artifact in memory, and an all-or-nothing commit to disk.

#include "projop/band_limited.hpp"
#include "projop/error.hpp"
#include "projop/fixed_point.hpp"
#include "projop/format.hpp"
#include "projop/function_space.hpp"
#include "projop/leray_schauder.hpp"
#include "projop/neural_op.hpp"
#include "projop/operator_zoo.hpp"
#include "projop/ortho_poly.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace projop {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

enum class ExperimentKind { project_converge, ls_net, train_operator, solve, converge_study };

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
    if (name == "project-converge") return ExperimentKind::project_converge;
    if (name == "ls-net") return ExperimentKind::ls_net;
    if (name == "train-operator") return ExperimentKind::train_operator;
    if (name == "solve") return ExperimentKind::solve;
    if (name == "converge-study") return ExperimentKind::converge_study;
    return std::nullopt;
}

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::project_converge: return "project-converge";
    case ExperimentKind::ls_net: return "ls-net";
    case ExperimentKind::train_operator: return "train-operator";
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::converge_study: return "converge-study";
    }
    return "?";
}

enum class OperatorTag { zero, identity, fredholm, nemytskii, hammerstein };

inline std::optional<OperatorTag> parse_operator_tag(std::string_view name) {
    if (name == "zero") return OperatorTag::zero;
    if (name == "identity") return OperatorTag::identity;
    if (name == "fredholm") return OperatorTag::fredholm;
    if (name == "nemytskii") return OperatorTag::nemytskii;
    if (name == "hammerstein") return OperatorTag::hammerstein;
    return std::nullopt;
}

inline std::optional<Kernel::Kind> parse_kernel_kind(std::string_view name) {
    if (name == "separable") return Kernel::Kind::separable;
    if (name == "exp-dot") return Kernel::Kind::exp_dot;
    if (name == "gauss") return Kernel::Kind::gauss;
    return std::nullopt;
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::project_converge;
    std::string output;
    std::uint64_t seed = 1;

    int dimension = 1;
    int points = 32;
    double p = 2.0;

    std::string basis = "legendre";  // legendre | gram-schmidt
    int degree = 8;
    std::string weight = "one";      // one | affine | net
    double weight_slope = 0.5;       // affine: rho = 1 + slope * x_1
    std::size_t weight_width = 8;    // net: hidden width of the weight network
    double weight_scale = 0.3;       // net: scale of its random weights

    Field function = Field::exp;
    std::vector<std::size_t> n_list;

    OperatorTag op = OperatorTag::fredholm;
    Kernel::Kind kernel = Kernel::Kind::separable;
    Field kernel_a = Field::t;
    Field kernel_b = Field::t;
    double lambda = 0.5;
    Nonlinearity nonlinearity = Nonlinearity::identity;

    Field forcing = Field::t;
    SolveMethod method = SolveMethod::picard;
    double tol = 1e-12;
    int max_iter = 200;
    std::string reference;  // analytic | self; empty picks analytic when available
    std::size_t n = 8;
    std::size_t m = 8;

    TrainConfig train{0.2, 2000, 10, 1, 0, Activation::tanh, 1e-12};
    int train_samples = 50;
    int test_samples = 50;
    int modes = 4;
    double max_frequency = 2.0;

    double epsilon = 0.5;
    int members = 20;

    /// Normalized `key = value` lines for every key that applies to the kind, defaults included.
    std::vector<std::pair<std::string, std::string>> echo;
};

struct ConfigIssue {
    int line = 0;  // 0 when the issue is not tied to a line
    std::string message;

    std::string describe() const { return line > 0 ? "line " + std::to_string(line) + ": " + message : message; }
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues)
        : Error(ErrorKind::config, summarize(issues)), issues_(std::move(issues)) {}

    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<ConfigIssue>& issues) {
        std::string s;
        for (const auto& i : issues) s += (s.empty() ? "" : "; ") + i.describe();
        return s;
    }
    std::vector<ConfigIssue> issues_;
};

namespace detail {

enum KindMask : unsigned {
    kPC = 1u << 0,
    kLS = 1u << 1,
    kTR = 1u << 2,
    kSO = 1u << 3,
    kCS = 1u << 4,
    kAll = 0x1fu,
    kBasisKinds = kPC | kTR | kSO | kCS,
    kOperatorKinds = kTR | kSO | kCS,
};

inline unsigned mask_of(ExperimentKind k) { return 1u << static_cast<unsigned>(k); }

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view v) {
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return out;
}

/// Setter: applies a raw value, returning an error message on rejection.
using Setter = std::function<std::optional<std::string>(ExperimentConfig&, std::string_view)>;
/// Getter: the normalized value for the config echo.
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeySpec {
    std::string_view name;
    unsigned kinds;
    Setter set;
    Getter get;
};

inline std::string quoted(std::string_view v) { return "'" + std::string(v) + "'"; }

template <typename T>
Setter int_setter(T ExperimentConfig::*field, long long lo, long long hi) {
    return [=](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
        const auto x = parse_number<long long>(v);
        if (!x) return "expected an integer, got " + quoted(v);
        if (*x < lo || *x > hi)
            return "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " + std::string(v) + ")";
        c.*field = static_cast<T>(*x);
        return std::nullopt;
    };
}

template <typename T>
Getter int_getter(T ExperimentConfig::*field) {
    return [=](const ExperimentConfig& c) { return std::to_string(c.*field); };
}

inline Setter real_setter(double ExperimentConfig::*field, std::function<bool(double)> ok, std::string rule) {
    return [=](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
        const auto x = parse_number<double>(v);
        if (!x) return "expected a real number, got " + quoted(v);
        if (!std::isfinite(*x) || !ok(*x)) return rule + " (got " + std::string(v) + ")";
        c.*field = *x;
        return std::nullopt;
    };
}

inline Getter real_getter(double ExperimentConfig::*field) {
    return [=](const ExperimentConfig& c) { return format_real(c.*field); };
}

template <typename T, typename Parse, typename Show>
std::pair<Setter, Getter> enum_key(T ExperimentConfig::*field, Parse parse, Show show, std::string choices) {
    Setter s = [=](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
        const auto x = parse(v);
        if (!x) return "expected one of " + choices + ", got " + quoted(v);
        c.*field = *x;
        return std::nullopt;
    };
    Getter g = [=](const ExperimentConfig& c) { return std::string(show(c.*field)); };
    return {s, g};
}

inline std::pair<Setter, Getter> word_key(std::string ExperimentConfig::*field, std::vector<std::string> choices) {
    std::string listing;
    for (const auto& ch : choices) listing += (listing.empty() ? "" : "|") + ch;
    Setter s = [=](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
        for (const auto& ch : choices)
            if (v == ch) {
                c.*field = ch;
                return std::nullopt;
            }
        return "expected one of " + listing + ", got " + quoted(v);
    };
    Getter g = [=](const ExperimentConfig& c) { return c.*field; };
    return {s, g};
}

inline std::pair<Setter, Getter> field_key(Field ExperimentConfig::*field) {
    return enum_key(field, parse_field, [](Field f) { return to_string(f); }, "zero|one|t|sum|prod|exp|sin|cos");
}

inline std::string kernel_name(Kernel::Kind k) {
    return k == Kernel::Kind::separable ? "separable" : k == Kernel::Kind::exp_dot ? "exp-dot" : "gauss";
}

inline std::string operator_name(OperatorTag t) {
    constexpr std::string_view names[] = {"zero", "identity", "fredholm", "nemytskii", "hammerstein"};
    return std::string(names[static_cast<int>(t)]);
}

inline const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t;
        auto add = [&](std::string_view name, unsigned kinds, Setter s, Getter g) {
            t.push_back({name, kinds, std::move(s), std::move(g)});
        };
        auto add_pair = [&](std::string_view name, unsigned kinds, std::pair<Setter, Getter> sg) {
            add(name, kinds, std::move(sg.first), std::move(sg.second));
        };
        const auto positive = [](double x) { return x > 0.0; };
        const long long big = 1LL << 30;

        add_pair("kind", kAll,
                 enum_key(&ExperimentConfig::kind, parse_experiment_kind, [](ExperimentKind k) { return to_string(k); },
                          "project-converge|ls-net|train-operator|solve|converge-study"));
        add("output", kAll,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                c.output = std::string(v);
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return c.output; });
        add("seed", kAll,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_number<std::uint64_t>(v);
                if (!x) return "expected a nonnegative integer, got " + quoted(v);
                c.seed = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); });
        add("dimension", kAll, int_setter(&ExperimentConfig::dimension, 1, 8), int_getter(&ExperimentConfig::dimension));
        add("points", kAll, int_setter(&ExperimentConfig::points, 1, 4096), int_getter(&ExperimentConfig::points));
        add("p", kAll,
            real_setter(&ExperimentConfig::p, [](double x) { return x > 1.0 && x <= kMaxNormExponent; },
                        "must satisfy 1 < p <= 64"),
            real_getter(&ExperimentConfig::p));

        add_pair("basis", kBasisKinds, word_key(&ExperimentConfig::basis, {"legendre", "gram-schmidt"}));
        add("degree", kBasisKinds, int_setter(&ExperimentConfig::degree, 0, 64), int_getter(&ExperimentConfig::degree));
        add_pair("weight", kBasisKinds, word_key(&ExperimentConfig::weight, {"one", "affine", "net"}));
        add("weight_slope", kBasisKinds, real_setter(&ExperimentConfig::weight_slope, [](double) { return true; }, "must be finite"),
            real_getter(&ExperimentConfig::weight_slope));
        add("weight_width", kBasisKinds, int_setter(&ExperimentConfig::weight_width, 1, 1024),
            int_getter(&ExperimentConfig::weight_width));
        add("weight_scale", kBasisKinds,
            real_setter(&ExperimentConfig::weight_scale, [](double x) { return x >= 0.0; }, "must be nonnegative"),
            real_getter(&ExperimentConfig::weight_scale));

        add_pair("function", kPC, field_key(&ExperimentConfig::function));
        add("n_list", kPC | kCS,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                std::vector<std::size_t> list;
                std::size_t start = 0;
                while (start <= v.size()) {
                    const auto comma = v.find(',', start);
                    const auto item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
                    const auto x = parse_number<std::size_t>(item);
                    if (!x) return "expected a comma-separated list of nonnegative integers, got " + quoted(v);
                    if (!list.empty() && *x <= list.back()) return "entries must be strictly increasing";
                    list.push_back(*x);
                    if (comma == std::string_view::npos) break;
                    start = comma + 1;
                }
                c.n_list = std::move(list);
                return std::nullopt;
            },
            [](const ExperimentConfig& c) {
                std::string s;
                for (auto n : c.n_list) s += (s.empty() ? "" : ",") + std::to_string(n);
                return s;
            });

        add_pair("operator", kOperatorKinds,
                 enum_key(&ExperimentConfig::op, parse_operator_tag, operator_name,
                          "zero|identity|fredholm|nemytskii|hammerstein"));
        add_pair("kernel", kOperatorKinds,
                 enum_key(&ExperimentConfig::kernel, parse_kernel_kind, kernel_name, "separable|exp-dot|gauss"));
        add_pair("kernel_a", kOperatorKinds, field_key(&ExperimentConfig::kernel_a));
        add_pair("kernel_b", kOperatorKinds, field_key(&ExperimentConfig::kernel_b));
        add("lambda", kOperatorKinds, real_setter(&ExperimentConfig::lambda, [](double) { return true; }, "must be finite"),
            real_getter(&ExperimentConfig::lambda));
        add_pair("nonlinearity", kOperatorKinds,
                 enum_key(&ExperimentConfig::nonlinearity, parse_nonlinearity,
                          [](Nonlinearity g) { return to_string(g); }, "identity|square|cube|sin|tanh"));

        add_pair("forcing", kSO | kCS, field_key(&ExperimentConfig::forcing));
        add_pair("method", kSO | kCS,
                 enum_key(&ExperimentConfig::method, parse_solve_method, [](SolveMethod m) { return to_string(m); },
                          "picard|newton"));
        add("tol", kSO | kCS, real_setter(&ExperimentConfig::tol, positive, "must be positive"),
            real_getter(&ExperimentConfig::tol));
        add("max_iter", kSO | kCS, int_setter(&ExperimentConfig::max_iter, 1, 1000000),
            int_getter(&ExperimentConfig::max_iter));
        add_pair("reference", kCS, word_key(&ExperimentConfig::reference, {"analytic", "self"}));
        add("n", kSO | kTR, int_setter(&ExperimentConfig::n, 0, big), int_getter(&ExperimentConfig::n));
        add("m", kTR, int_setter(&ExperimentConfig::m, 0, big), int_getter(&ExperimentConfig::m));

        add("learning_rate", kTR,
            [positive](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_number<double>(v);
                if (!x) return "expected a real number, got " + quoted(v);
                if (!std::isfinite(*x) || !positive(*x)) return "must be positive (got " + std::string(v) + ")";
                c.train.learning_rate = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return format_real(c.train.learning_rate); });
        add("epochs", kTR,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_number<int>(v);
                if (!x) return "expected an integer, got " + quoted(v);
                if (*x < 1) return "must be positive (got " + std::string(v) + ")";
                c.train.epochs = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return std::to_string(c.train.epochs); });
        add("batch_size", kTR,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_number<std::size_t>(v);
                if (!x) return "expected a nonnegative integer (0 = full batch), got " + quoted(v);
                c.train.batch_size = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return std::to_string(c.train.batch_size); });
        add("hidden_width", kTR,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_number<std::size_t>(v);
                if (!x) return "expected a nonnegative integer (0 = default), got " + quoted(v);
                c.train.hidden_width = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return std::to_string(c.train.hidden_width); });
        add("activation", kTR,
            [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_activation(v);
                if (!x) return "expected one of tanh|relu, got " + quoted(v);
                c.train.activation = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.train.activation)); });
        add("loss_tolerance", kTR,
            [positive](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                const auto x = parse_number<double>(v);
                if (!x) return "expected a real number, got " + quoted(v);
                if (!std::isfinite(*x) || !positive(*x)) return "must be positive (got " + std::string(v) + ")";
                c.train.loss_tolerance = *x;
                return std::nullopt;
            },
            [](const ExperimentConfig& c) { return format_real(c.train.loss_tolerance); });
        add("train_samples", kTR, int_setter(&ExperimentConfig::train_samples, 1, 1000000),
            int_getter(&ExperimentConfig::train_samples));
        add("test_samples", kTR, int_setter(&ExperimentConfig::test_samples, 1, 1000000),
            int_getter(&ExperimentConfig::test_samples));
        add("modes", kTR | kLS, int_setter(&ExperimentConfig::modes, 1, 64), int_getter(&ExperimentConfig::modes));
        add("max_frequency", kTR | kLS,
            real_setter(&ExperimentConfig::max_frequency, [](double x) { return x >= 0.0; }, "must be nonnegative"),
            real_getter(&ExperimentConfig::max_frequency));

        add("epsilon", kLS, real_setter(&ExperimentConfig::epsilon, positive, "must be positive"),
            real_getter(&ExperimentConfig::epsilon));
        add("members", kLS, int_setter(&ExperimentConfig::members, 1, 100000), int_getter(&ExperimentConfig::members));
        return t;
    }();
    return table;
}

inline const KeySpec* find_key(std::string_view name) {
    for (const auto& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

/// Number of graded multi-indices of total degree <= D in d variables: C(d + D, D).
inline std::size_t basis_size(int d, int D) {
    double c = 1.0;
    for (int i = 1; i <= d; ++i) c = c * (D + i) / i;
    return static_cast<std::size_t>(std::llround(c));
}

inline bool analytic_reference_available(const ExperimentConfig& c) {
    return c.op == OperatorTag::fredholm && c.kernel == Kernel::Kind::separable;
}

} // namespace detail

/// Parses and validates a config. Collects every problem and throws ConfigError listing them.
inline ExperimentConfig parse_config(std::string_view text) {
    struct Entry {
        std::string key;
        std::string value;
        int line;
    };
    std::vector<ConfigIssue> issues;
    std::vector<Entry> entries;
    std::map<std::string, int> first_line;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        auto line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            issues.push_back({line_no, "expected 'key = value', got " + detail::quoted(line)});
            continue;
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) {
            issues.push_back({line_no, "missing key before '='"});
            continue;
        }
        if (value.empty()) {
            issues.push_back({line_no, key + ": missing value"});
            continue;
        }
        if (!detail::find_key(key)) {
            issues.push_back({line_no, "unknown key " + detail::quoted(key)});
            continue;
        }
        if (const auto it = first_line.find(key); it != first_line.end()) {
            issues.push_back({line_no, "duplicate key " + detail::quoted(key) + " (lines " + std::to_string(it->second) +
                                           " and " + std::to_string(line_no) + ")"});
            continue;
        }
        first_line[key] = line_no;
        entries.push_back({key, value, line_no});
    }

    ExperimentConfig cfg;
    bool kind_known = false;
    for (const auto& e : entries)
        if (e.key == "kind") {
            if (auto err = detail::find_key("kind")->set(cfg, e.value))
                issues.push_back({e.line, "kind: " + *err});
            else
                kind_known = true;
        }
    if (!first_line.count("kind")) issues.push_back({0, "missing required key 'kind'"});
    if (!first_line.count("output")) issues.push_back({0, "missing required key 'output'"});

    for (const auto& e : entries) {
        if (e.key == "kind") continue;
        const auto* spec = detail::find_key(e.key);
        if (kind_known && !(spec->kinds & detail::mask_of(cfg.kind))) {
            issues.push_back({e.line, "key " + detail::quoted(e.key) + " does not apply to kind " +
                                          detail::quoted(to_string(cfg.kind))});
            continue;
        }
        if (auto err = spec->set(cfg, e.value)) issues.push_back({e.line, e.key + ": " + *err});
    }

    auto line_of = [&](const std::string& key) {
        const auto it = first_line.find(key);
        return it == first_line.end() ? 0 : it->second;
    };

    if (issues.empty()) {
        const bool uses_basis = cfg.kind != ExperimentKind::ls_net;
        const std::size_t size = detail::basis_size(cfg.dimension, cfg.degree);
        if (uses_basis) {
            if (cfg.basis == "legendre" && cfg.weight != "one")
                issues.push_back({line_of("weight"), "weight: the legendre basis requires weight = one"});
            if (cfg.points < cfg.degree + 1)
                issues.push_back({line_of("points") ? line_of("points") : line_of("degree"),
                                  "points must be >= degree + 1 (points " + std::to_string(cfg.points) +
                                      ", degree " + std::to_string(cfg.degree) + ")"});
            auto check_index = [&](const std::string& key, std::size_t v) {
                if (v >= size)
                    issues.push_back({line_of(key), key + ": index " + std::to_string(v) +
                                                        " exceeds the basis (size " + std::to_string(size) + ")"});
            };
            if (cfg.kind == ExperimentKind::solve || cfg.kind == ExperimentKind::train_operator) check_index("n", cfg.n);
            if (cfg.kind == ExperimentKind::train_operator) check_index("m", cfg.m);
            if (cfg.kind == ExperimentKind::project_converge || cfg.kind == ExperimentKind::converge_study) {
                if (cfg.n_list.empty()) {
                    if (cfg.kind == ExperimentKind::project_converge) {
                        for (std::size_t k = 0; k < size; ++k) cfg.n_list.push_back(k);
                    } else {
                        for (std::size_t k : {1u, 2u, 4u, 8u})
                            if (k < size) cfg.n_list.push_back(k);
                    }
                }
                for (std::size_t v : cfg.n_list) check_index("n_list", v);
            }
        }
        if (cfg.kind == ExperimentKind::converge_study) {
            if (cfg.reference.empty()) cfg.reference = detail::analytic_reference_available(cfg) ? "analytic" : "self";
            if (cfg.reference == "analytic" && !detail::analytic_reference_available(cfg))
                issues.push_back({line_of("reference"),
                                  "reference: analytic requires operator = fredholm with kernel = separable"});
        }
    }
    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(), [](const ConfigIssue& a, const ConfigIssue& b) {
            return (a.line == 0 ? INT_MAX : a.line) < (b.line == 0 ? INT_MAX : b.line);
        });
        throw ConfigError(std::move(issues));
    }

    for (const auto& spec : detail::key_table())
        if (spec.kinds & detail::mask_of(cfg.kind)) cfg.echo.emplace_back(spec.name, spec.get(cfg));
    cfg.train.seed = cfg.seed;
    return cfg;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct Artifact {
    std::string name;
    std::string content;
};

struct ExperimentResult {
    std::vector<Artifact> files;
    std::vector<std::string> log;  // free-form lines recorded in run.meta
};

namespace detail {

/// Independent deterministic stream seeds derived from the run seed.
inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

enum Stream : std::uint64_t { kDataStream = 1, kInputWeightStream = 2, kOutputWeightStream = 3 };

struct BuiltBasis {
    BasisPtr basis;
    std::optional<WeightNet> weight;
};

inline BuiltBasis build_basis(const ExperimentConfig& c, const QuadraturePtr& quad, std::uint64_t weight_seed) {
    const PNorm norm(c.p);
    if (c.basis == "legendre") return {std::make_shared<const OrthoPolyBasis>(tensor_legendre(c.dimension, c.degree, quad, norm)), {}};
    if (c.weight == "net") {
        auto w = WeightNet::random(c.dimension, c.weight_width, c.weight_scale, weight_seed);
        return {std::make_shared<const OrthoPolyBasis>(weight_net_basis(w, c.degree, quad, norm)), std::move(w)};
    }
    const double slope = c.weight == "affine" ? c.weight_slope : 0.0;
    auto rho = sample(quad, [slope](std::span<const double> x) { return 1.0 + slope * x[0]; });
    return {std::make_shared<const OrthoPolyBasis>(gram_schmidt(c.dimension, c.degree, WeightFunctional(rho, norm), quad)), {}};
}

inline OperatorHandle build_operator(const ExperimentConfig& c) {
    const Kernel kernel = c.kernel == Kernel::Kind::separable ? Kernel::separable(c.kernel_a, c.kernel_b)
                          : c.kernel == Kernel::Kind::exp_dot ? Kernel::exp_dot()
                                                              : Kernel::gauss();
    switch (c.op) {
    case OperatorTag::zero: return OperatorHandle::zero();
    case OperatorTag::identity: return OperatorHandle::identity();
    case OperatorTag::fredholm: return OperatorHandle::fredholm(kernel, c.lambda);
    case OperatorTag::nemytskii: return OperatorHandle::nemytskii(c.nonlinearity);
    case OperatorTag::hammerstein: return OperatorHandle::hammerstein(kernel, c.nonlinearity, c.lambda);
    }
    return OperatorHandle::zero();
}

inline ExperimentResult run_project_converge(const ExperimentConfig& c) {
    auto quad = build_quadrature(c.dimension, c.points);
    auto built = build_basis(c, quad, derived_seed(c.seed, kInputWeightStream));
    const PNorm norm(c.p);
    const auto f = sample(quad, c.function);
    const double f_norm = lp_norm(f, norm);
    std::ostringstream csv;
    csv << "n,error,projection_norm,uniform_bound,bound_holds\n";
    for (std::size_t n : c.n_list) {
        const auto proj = project(*built.basis, n, f);
        const double bound = uniform_bound(*built.basis, n);
        const double pn = lp_norm(proj.function, norm);
        csv << n << ',' << format_real(distance(f, proj.function, norm)) << ',' << format_real(pn) << ','
            << format_real(bound) << ',' << (pn <= bound * f_norm + 1e-8 ? "true" : "false") << '\n';
    }
    std::ostringstream basis_txt;
    write_basis(basis_txt, *built.basis);
    return {{{"projection.csv", csv.str()}, {"basis.txt", basis_txt.str()}}, {}};
}

inline ExperimentResult run_ls_net(const ExperimentConfig& c) {
    auto quad = build_quadrature(c.dimension, c.points);
    const PNorm norm(c.p);
    std::mt19937_64 rng(derived_seed(c.seed, kDataStream));
    std::vector<SampledFunction> members;
    for (int i = 0; i < c.members; ++i) members.push_back(random_band_limited(rng, quad, c.modes, c.max_frequency));
    const auto net = greedy_net(CompactSampleSet(members, norm), c.epsilon);
    std::ostringstream csv;
    csv << "member,nearest_center,distance,projection_error\n";
    for (std::size_t i = 0; i < members.size(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < net.centers().size(); ++j) {
            const double d = distance(members[i], net.centers()[j], norm);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        csv << i << ',' << best << ',' << format_real(best_d) << ','
            << format_real(distance(members[i], ls_project(net, members[i]), norm)) << '\n';
    }
    std::ostringstream centers;
    write_projector(centers, net);
    const auto check = check_separation(net, c.epsilon);
    return {{{"net.csv", csv.str()}, {"centers.txt", centers.str()}},
            {"centers " + std::to_string(net.centers().size()), "min_gap " + format_real(check.min_gap),
             std::string("separated ") + (check.separated ? "true" : "false")}};
}

inline ExperimentResult run_train_operator(const ExperimentConfig& c) {
    auto quad = build_quadrature(c.dimension, c.points);
    auto in = build_basis(c, quad, derived_seed(c.seed, kInputWeightStream));
    auto out = c.weight == "net" ? build_basis(c, quad, derived_seed(c.seed, kOutputWeightStream)) : in;
    const auto op = build_operator(c);
    std::mt19937_64 rng(derived_seed(c.seed, kDataStream));
    TrainingSet train, test;
    for (int i = 0; i < c.train_samples; ++i) {
        auto f = random_band_limited(rng, quad, c.modes, c.max_frequency);
        train.emplace_back(f, op(f));
    }
    for (int i = 0; i < c.test_samples; ++i) {
        auto f = random_band_limited(rng, quad, c.modes, c.max_frequency);
        test.emplace_back(f, op(f));
    }
    auto trained = train_operator(train, in.basis, out.basis, c.n, c.m, c.train, in.weight, out.weight);

    std::ostringstream history;
    history << "epoch,loss\n";
    for (std::size_t e = 0; e < trained.report.loss_history.size(); ++e)
        history << e << ',' << format_real(trained.report.loss_history[e]) << '\n';
    std::ostringstream eval;
    eval << "split,samples,relative_l2_error\n"
         << "train," << train.size() << ',' << format_real(relative_l2_error(trained.op, train)) << '\n'
         << "test," << test.size() << ',' << format_real(relative_l2_error(trained.op, test)) << '\n';
    std::ostringstream model;
    write_model(model, archive_of(trained.op, c.train));
    return {{{"training.csv", history.str()}, {"evaluation.csv", eval.str()}, {"model.txt", model.str()}},
            {"initial_loss " + format_real(trained.report.initial_loss),
             "final_loss " + format_real(trained.report.final_loss),
             "epochs_run " + std::to_string(trained.report.epochs_run)}};
}

inline ExperimentResult run_solve(const ExperimentConfig& c) {
    auto quad = build_quadrature(c.dimension, c.points);
    auto built = build_basis(c, quad, derived_seed(c.seed, kInputWeightStream));
    ProjectedEquation eq(build_operator(c), sample(quad, c.forcing), built.basis, c.n);
    const std::vector<double> c0(c.n + 1, 0.0);
    const auto report = solve(eq, c0, c.tol, c.max_iter, c.method);
    std::ostringstream summary;
    summary << "n,method,iterations,residual,converged\n"
            << c.n << ',' << to_string(report.method) << ',' << report.iterations << ','
            << format_real(report.residual) << ',' << (report.converged ? "true" : "false") << '\n';
    std::ostringstream coeffs;
    coeffs << "k,coefficient\n";
    for (std::size_t k = 0; k < report.coefficients.size(); ++k)
        coeffs << k << ',' << format_real(report.coefficients[k]) << '\n';
    return {{{"solve.csv", summary.str()}, {"coefficients.csv", coeffs.str()}},
            {std::string("status ") + (report.converged ? "converged" : "not-converged")}};
}

inline ExperimentResult run_converge_study(const ExperimentConfig& c) {
    auto quad = build_quadrature(c.dimension, c.points);
    auto built = build_basis(c, quad, derived_seed(c.seed, kInputWeightStream));
    std::optional<SampledFunction> reference;
    if (c.reference == "analytic")
        reference = separable_reference_solution(c.kernel_a, c.kernel_b, c.lambda, c.forcing, quad);
    const auto rows = convergence_study(build_operator(c), sample(quad, c.forcing), built.basis, c.n_list,
                                        {c.method, c.tol, c.max_iter}, reference);
    std::ostringstream csv;
    write_study_csv(csv, rows);
    ExperimentResult result{{{"study.csv", csv.str()}}, {"reference " + c.reference}};
    for (const auto& r : rows) {
        std::string line = "row n=" + std::to_string(r.n) + " uniform_bound=" + format_real(r.uniform_bound);
        if (!r.failure.empty()) line += " failure=\"" + r.failure + "\"";
        result.log.push_back(std::move(line));
    }
    return result;
}

} // namespace detail

/// Computes every artifact of the experiment in memory; nothing touches the disk.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
    case ExperimentKind::project_converge: return detail::run_project_converge(cfg);
    case ExperimentKind::ls_net: return detail::run_ls_net(cfg);
    case ExperimentKind::train_operator: return detail::run_train_operator(cfg);
    case ExperimentKind::solve: return detail::run_solve(cfg);
    case ExperimentKind::converge_study: return detail::run_converge_study(cfg);
    }
    fail(ErrorKind::usage, "unknown experiment kind");
}

/// run.meta: config echo, seed, artifact version, wall time and the run log.
inline std::string render_meta(const ExperimentConfig& cfg, const ExperimentResult& result, double wall_seconds) {
    std::ostringstream os;
    os << "# projop run v1\n"
       << "version " << kArtifactVersion << '\n'
       << "seed " << cfg.seed << '\n'
       << "wall_time_seconds " << format_real(wall_seconds) << '\n';
    for (const auto& [k, v] : cfg.echo) os << "config " << k << " = " << v << '\n';
    for (const auto& line : result.log) os << "log " << line << '\n';
    return os.str();
}

inline constexpr std::string_view kFailedMarker = ".failed";

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << content;
    os.flush();
    require(static_cast<bool>(os), ErrorKind::resource, "cannot write " + path.string());
}

} // namespace detail

/// Writes every file to a temporary name first, then renames them into place,
/// so a failure never leaves a truncated artifact. Clears a stale failure marker.
inline void commit_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::resource, "cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<fs::path> staged;
    try {
        for (const auto& f : files) {
            const auto tmp = dir / (f.name + ".tmp");
            staged.push_back(tmp);
            detail::write_file(tmp, f.content);
        }
    } catch (...) {
        for (const auto& p : staged) fs::remove(p, ec);
        throw;
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        fs::rename(staged[i], dir / files[i].name, ec);
        require(!ec, ErrorKind::resource, "cannot rename " + staged[i].string() + ": " + ec.message());
    }
    fs::remove(dir / kFailedMarker, ec);
}

/// Records a failure: removes artifacts a previous run left for these names and writes the marker.
inline void mark_failed(const std::filesystem::path& dir, const std::vector<std::string>& artifact_names,
                        const std::string& record) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return;
    for (const auto& name : artifact_names) fs::remove(dir / name, ec);
    const auto tmp = dir / (std::string(kFailedMarker) + ".tmp");
    try {
        detail::write_file(tmp, record + "\n");
        fs::rename(tmp, dir / kFailedMarker, ec);
    } catch (const Error&) {
    }
}

/// Artifact names an experiment kind produces (used to clear stale outputs on failure).
inline std::vector<std::string> artifact_names(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::project_converge: return {"projection.csv", "basis.txt", "run.meta"};
    case ExperimentKind::ls_net: return {"net.csv", "centers.txt", "run.meta"};
    case ExperimentKind::train_operator: return {"training.csv", "evaluation.csv", "model.txt", "run.meta"};
    case ExperimentKind::solve: return {"solve.csv", "coefficients.csv", "run.meta"};
    case ExperimentKind::converge_study: return {"study.csv", "run.meta"};
    }
    return {};
}

} // namespace projop
