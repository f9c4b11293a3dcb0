#pragma once

/// Neural projection operators: a feedforward network f_{n,m} between the
/// coefficient spaces of two orthogonal-polynomial projections, applied as
///
///     f  ->  phi_n P_n f  ->  f_{n,m}(.)  ->  sum_k c_k p^out_k.
///
/// The network is a plain MLP (tanh or relu hidden layers, linear output) with
/// in-library backpropagation and deterministic seeded gradient descent.

#include "projop/error.hpp"
#include "projop/function_space.hpp"
#include "projop/operator_zoo.hpp"
#include "projop/ortho_poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace projop {

enum class Activation { tanh, relu };

inline std::optional<Activation> parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    return std::nullopt;
}

inline std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

/// Affine layer y = W x + b, W stored row-major (outputs x inputs).
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0) {}

    double& w(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
    double w(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }
};

class Mlp {
public:
    Mlp() = default;

    /// All-zero network with the given layer sizes (input, hidden..., output).
    Mlp(const std::vector<std::size_t>& sizes, Activation activation) : activation_(activation) {
        require(sizes.size() >= 2, ErrorKind::usage, "an MLP needs at least input and output sizes");
        for (std::size_t s : sizes) require(s > 0, ErrorKind::usage, "layer sizes must be positive");
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) layers_.emplace_back(sizes[l], sizes[l + 1]);
    }

    /// Xavier-uniform weights, zero biases.
    static Mlp random(const std::vector<std::size_t>& sizes, Activation activation, std::mt19937_64& rng) {
        Mlp net(sizes, activation);
        for (auto& layer : net.layers_) {
            const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (auto& w : layer.weights) w = dist(rng);
        }
        return net;
    }

    Activation activation() const noexcept { return activation_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    std::size_t input_size() const { return layers_.front().inputs; }
    std::size_t output_size() const { return layers_.back().outputs; }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> s{input_size()};
        for (const auto& l : layers_) s.push_back(l.outputs);
        return s;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
        return n;
    }

    /// Parameters flattened layer by layer: weights (row-major) then biases.
    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto& l : layers_) {
            p.insert(p.end(), l.weights.begin(), l.weights.end());
            p.insert(p.end(), l.bias.begin(), l.bias.end());
        }
        return p;
    }

    void set_parameters(std::span<const double> p) {
        require(p.size() == parameter_count(), ErrorKind::usage, "parameter vector has the wrong length");
        std::size_t at = 0;
        for (auto& l : layers_) {
            std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(at), l.weights.size(), l.weights.begin());
            at += l.weights.size();
            std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(at), l.bias.size(), l.bias.begin());
            at += l.bias.size();
        }
    }

    bool all_finite() const {
        for (const auto& l : layers_) {
            for (double w : l.weights)
                if (!std::isfinite(w)) return false;
            for (double b : l.bias)
                if (!std::isfinite(b)) return false;
        }
        return true;
    }

private:
    Activation activation_ = Activation::tanh;
    std::vector<DenseLayer> layers_;
};

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : std::max(z, 0.0); }

/// Derivative expressed through the pre-activation z and the activation value.
inline double activate_derivative(Activation a, double z, double value) {
    return a == Activation::tanh ? 1.0 - value * value : (z > 0.0 ? 1.0 : 0.0);
}

inline void affine(const DenseLayer& layer, std::span<const double> x, std::vector<double>& out) {
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t r = 0; r < layer.outputs; ++r) {
        const double* row = layer.weights.data() + r * layer.inputs;
        double sum = 0.0;
        for (std::size_t c = 0; c < layer.inputs; ++c) sum += row[c] * x[c];
        out[r] += sum;
    }
}

} // namespace detail

inline std::vector<double> mlp_forward(const Mlp& net, std::span<const double> v) {
    require(v.size() == net.input_size(), ErrorKind::usage,
            "network input has size " + std::to_string(v.size()) + ", expected " + std::to_string(net.input_size()));
    std::vector<double> x(v.begin(), v.end()), z;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        detail::affine(layers[l], x, z);
        if (l + 1 < layers.size())
            for (auto& e : z) e = detail::activate(net.activation(), e);
        x.swap(z);
    }
    return x;
}

inline std::vector<std::vector<double>> mlp_forward_batch(const Mlp& net, const std::vector<std::vector<double>>& batch) {
    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    for (const auto& v : batch) out.push_back(mlp_forward(net, v));
    return out;
}

/// Gradient of 0.5 * ||forward(v) - target||^2, shaped like the network.
struct MlpGradient {
    std::vector<DenseLayer> layers;

    std::vector<double> flatten() const {
        std::vector<double> p;
        for (const auto& l : layers) {
            p.insert(p.end(), l.weights.begin(), l.weights.end());
            p.insert(p.end(), l.bias.begin(), l.bias.end());
        }
        return p;
    }
};

namespace detail {

/// Accumulates scale * gradient for one sample into grad; returns the sample loss.
inline double backprop_accumulate(const Mlp& net, std::span<const double> v, std::span<const double> target,
                                  double scale, MlpGradient& grad) {
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();
    std::vector<std::vector<double>> pre(depth), act(depth + 1);
    act[0].assign(v.begin(), v.end());
    for (std::size_t l = 0; l < depth; ++l) {
        affine(layers[l], act[l], pre[l]);
        act[l + 1] = pre[l];
        if (l + 1 < depth)
            for (auto& e : act[l + 1]) e = activate(net.activation(), e);
    }
    std::vector<double> delta(act[depth].size());
    double loss = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        delta[i] = act[depth][i] - target[i];
        loss += 0.5 * delta[i] * delta[i];
    }
    for (std::size_t l = depth; l-- > 0;) {
        auto& g = grad.layers[l];
        const auto& input = act[l];
        for (std::size_t r = 0; r < g.outputs; ++r) {
            const double d = scale * delta[r];
            g.bias[r] += d;
            double* row = g.weights.data() + r * g.inputs;
            for (std::size_t c = 0; c < g.inputs; ++c) row[c] += d * input[c];
        }
        if (l == 0) break;
        std::vector<double> next(layers[l].inputs, 0.0);
        for (std::size_t r = 0; r < layers[l].outputs; ++r)
            for (std::size_t c = 0; c < layers[l].inputs; ++c) next[c] += layers[l].w(r, c) * delta[r];
        for (std::size_t c = 0; c < next.size(); ++c)
            next[c] *= activate_derivative(net.activation(), pre[l - 1][c], act[l][c]);
        delta.swap(next);
    }
    return loss;
}

inline MlpGradient zero_gradient(const Mlp& net) {
    MlpGradient g;
    for (const auto& l : net.layers()) g.layers.emplace_back(l.inputs, l.outputs);
    return g;
}

} // namespace detail

inline MlpGradient mlp_gradient(const Mlp& net, std::span<const double> v, std::span<const double> target) {
    require(v.size() == net.input_size(), ErrorKind::usage, "gradient input size mismatch");
    require(target.size() == net.output_size(), ErrorKind::usage, "gradient target size mismatch");
    auto grad = detail::zero_gradient(net);
    detail::backprop_accumulate(net, v, target, 1.0, grad);
    return grad;
}

/// Mean over samples of 0.5 * ||forward(v) - target||^2.
inline double mlp_loss(const Mlp& net, const std::vector<std::vector<double>>& inputs,
                       const std::vector<std::vector<double>>& targets) {
    double loss = 0.0;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        const auto y = mlp_forward(net, inputs[s]);
        for (std::size_t i = 0; i < y.size(); ++i) loss += 0.5 * (y[i] - targets[s][i]) * (y[i] - targets[s][i]);
    }
    return loss / static_cast<double>(inputs.size());
}

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 2000;
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 1;
    std::size_t hidden_width = 0;  // 0 = 4 * max(n, m) + 16
    Activation activation = Activation::tanh;
    double loss_tolerance = 1e-12;

    void validate() const {
        require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorKind::usage, "learning_rate must be positive");
        require(epochs > 0, ErrorKind::usage, "epochs must be positive");
        require(loss_tolerance > 0.0, ErrorKind::usage, "loss_tolerance must be positive");
    }
};

/// Default single-hidden-layer width for truncation indices n and m.
inline std::size_t default_hidden_width(std::size_t n, std::size_t m) { return 4 * std::max(n, m) + 16; }

/// A weight function rho(x) = 1 + net(x) given by a small network on [-1,1]^d,
/// recorded with the parameters that generated it.
struct WeightNet {
    Mlp net;
    std::uint64_t seed = 0;

    static WeightNet random(int dimension, std::size_t width, double scale, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        WeightNet w{Mlp::random({static_cast<std::size_t>(dimension), width, 1}, Activation::tanh, rng), seed};
        for (auto& l : w.net.layers())
            for (auto& v : l.weights) v *= scale;
        return w;
    }

    double operator()(std::span<const double> x) const { return 1.0 + mlp_forward(net, x)[0]; }

    SampledFunction sample_on(const QuadraturePtr& quad) const {
        return projop::sample(quad, [this](std::span<const double> x) { return (*this)(x); });
    }
};

/// Gram-Schmidt basis under the weight produced by a weight network. May raise a degeneracy error.
inline OrthoPolyBasis weight_net_basis(const WeightNet& weight, int degree, const QuadraturePtr& quad, PNorm norm) {
    return gram_schmidt(quad->dimension(), degree, WeightFunctional(weight.sample_on(quad), norm), quad);
}

class NeuralProjectionOperator {
public:
    NeuralProjectionOperator(BasisPtr input, std::size_t n, BasisPtr output, std::size_t m, Mlp network,
                             std::optional<WeightNet> input_weight = std::nullopt,
                             std::optional<WeightNet> output_weight = std::nullopt)
        : input_(std::move(input)), output_(std::move(output)), n_(n), m_(m), network_(std::move(network)),
          input_weight_(std::move(input_weight)), output_weight_(std::move(output_weight)) {
        require(n_ < input_->size(), ErrorKind::usage, "input truncation exceeds input basis size");
        require(m_ < output_->size(), ErrorKind::usage, "output truncation exceeds output basis size");
        require(network_.input_size() == n_ + 1, ErrorKind::usage, "network input size must be n + 1");
        require(network_.output_size() == m_ + 1, ErrorKind::usage, "network output size must be m + 1");
    }

    const OrthoPolyBasis& input_basis() const noexcept { return *input_; }
    const OrthoPolyBasis& output_basis() const noexcept { return *output_; }
    const BasisPtr& input_basis_ptr() const noexcept { return input_; }
    const BasisPtr& output_basis_ptr() const noexcept { return output_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t m() const noexcept { return m_; }
    const Mlp& network() const noexcept { return network_; }
    const std::optional<WeightNet>& input_weight() const noexcept { return input_weight_; }
    const std::optional<WeightNet>& output_weight() const noexcept { return output_weight_; }

private:
    BasisPtr input_;
    BasisPtr output_;
    std::size_t n_;
    std::size_t m_;
    Mlp network_;
    std::optional<WeightNet> input_weight_;
    std::optional<WeightNet> output_weight_;
};

/// project -> network -> reconstruct; the output lies in span(p^out_0..p^out_m).
inline SampledFunction apply_operator(const NeuralProjectionOperator& op, const SampledFunction& f) {
    const auto c = project_coefficients(op.input_basis(), op.n(), f);
    const auto out = mlp_forward(op.network(), c);
    return reconstruct(op.output_basis(), out);
}

/// Wraps a trained operator as a black-box OperatorHandle.
inline OperatorHandle as_operator(std::shared_ptr<const NeuralProjectionOperator> op) {
    return OperatorHandle::learned("neural-projection", [op = std::move(op)](const SampledFunction& f) {
        return apply_operator(*op, f);
    });
}

struct TrainReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int epochs_run = 0;
    std::vector<double> loss_history;  // loss before each epoch, then the final loss
};

struct TrainedOperator {
    NeuralProjectionOperator op;
    TrainReport report;
};

/// Training pairs (f, T f).
using TrainingSet = std::vector<std::pair<SampledFunction, SampledFunction>>;

/// Fits f_{n,m} by gradient descent on the mean of 0.5 * ||f_{n,m}(phi_n P_n f) - phi_m P_m g||^2.
inline TrainedOperator train_operator(const TrainingSet& data, BasisPtr input, BasisPtr output, std::size_t n,
                                      std::size_t m, const TrainConfig& cfg,
                                      std::optional<WeightNet> input_weight = std::nullopt,
                                      std::optional<WeightNet> output_weight = std::nullopt) {
    cfg.validate();
    require(!data.empty(), ErrorKind::usage, "training set is empty");
    require(n < input->size() && m < output->size(), ErrorKind::usage, "truncation exceeds basis size");

    std::vector<std::vector<double>> inputs, targets;
    for (const auto& [f, g] : data) {
        inputs.push_back(project_coefficients(*input, n, f));
        targets.push_back(project_coefficients(*output, m, g));
    }

    std::mt19937_64 rng(cfg.seed);
    const std::size_t width = cfg.hidden_width ? cfg.hidden_width : default_hidden_width(n, m);
    Mlp net = Mlp::random({n + 1, width, m + 1}, cfg.activation, rng);
    // output layer starts at zero: the untrained operator is the zero map
    std::fill(net.layers().back().weights.begin(), net.layers().back().weights.end(), 0.0);

    const std::size_t count = inputs.size();
    const std::size_t batch = cfg.batch_size == 0 ? count : std::min(cfg.batch_size, count);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainReport report;
    report.initial_loss = mlp_loss(net, inputs, targets);
    double loss = report.initial_loss;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        report.loss_history.push_back(loss);
        if (loss < cfg.loss_tolerance) break;
        if (batch < count) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < count; start += batch) {
            const std::size_t end = std::min(start + batch, count);
            auto grad = detail::zero_gradient(net);
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t s = start; s < end; ++s)
                detail::backprop_accumulate(net, inputs[order[s]], targets[order[s]], scale, grad);
            for (std::size_t l = 0; l < net.layers().size(); ++l) {
                auto& layer = net.layers()[l];
                for (std::size_t i = 0; i < layer.weights.size(); ++i)
                    layer.weights[i] -= cfg.learning_rate * grad.layers[l].weights[i];
                for (std::size_t i = 0; i < layer.bias.size(); ++i)
                    layer.bias[i] -= cfg.learning_rate * grad.layers[l].bias[i];
            }
        }
        loss = mlp_loss(net, inputs, targets);
        ++report.epochs_run;
        if (!std::isfinite(loss) || loss > 1e6 * std::max(report.initial_loss, 1e-300))
            fail(ErrorKind::divergence, "training diverged at epoch " + std::to_string(epoch) +
                                            " (loss " + std::to_string(loss) + ")");
    }
    report.final_loss = loss;
    report.loss_history.push_back(loss);
    return {NeuralProjectionOperator(std::move(input), n, std::move(output), m, std::move(net),
                                     std::move(input_weight), std::move(output_weight)),
            std::move(report)};
}

/// sqrt(sum ||T f - S f||^2 / sum ||T f||^2) over the samples. When every T f
/// vanishes the denominator falls back to sum ||f||^2.
inline double relative_l2_error(const NeuralProjectionOperator& op, const TrainingSet& samples) {
    const PNorm l2(2.0);
    double num = 0.0, den = 0.0, input_scale = 0.0;
    for (const auto& [f, g] : samples) {
        const double e = distance(g, apply_operator(op, f), l2);
        const double t = lp_norm(g, l2);
        const double s = lp_norm(f, l2);
        num += e * e;
        den += t * t;
        input_scale += s * s;
    }
    if (den == 0.0) den = input_scale;
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Model archive
// ---------------------------------------------------------------------------

/// Reference to a basis that can be rebuilt without its samples.
struct BasisSpec {
    std::string kind = "legendre";  // legendre | weight-net
    int dimension = 1;
    int degree = 0;
    int points = 1;
    double p = 2.0;

    static BasisSpec of(const OrthoPolyBasis& basis, bool weight_net) {
        return {weight_net ? "weight-net" : "legendre", basis.dimension(), basis.max_degree(),
                basis.quadrature()->points_per_axis(), basis.functional().norm().p()};
    }
};

/// Everything needed to rebuild a NeuralProjectionOperator.
struct ModelArchive {
    Mlp network;
    std::size_t n = 0;
    std::size_t m = 0;
    TrainConfig config;
    BasisSpec input;
    BasisSpec output;
    std::optional<WeightNet> input_weight;
    std::optional<WeightNet> output_weight;
};

namespace detail {

inline void write_values(std::ostream& os, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    os << '\n';
}

inline void write_network(std::ostream& os, const std::string& tag, const Mlp& net) {
    os << tag << " " << to_string(net.activation()) << " " << net.layers().size() + 1;
    for (std::size_t s : net.sizes()) os << ' ' << s;
    os << '\n';
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        os << "weights " << l << '\n';
        write_values(os, net.layers()[l].weights);
        os << "bias " << l << '\n';
        write_values(os, net.layers()[l].bias);
    }
}

inline void write_basis_spec(std::ostream& os, const std::string& tag, const BasisSpec& b) {
    os << tag << ' ' << b.kind << ' ' << b.dimension << ' ' << b.degree << ' ' << b.points << ' ' << b.p << '\n';
}

class ArchiveReader {
public:
    explicit ArchiveReader(std::istream& is) : is_(is) {}

    void expect(const std::string& word) {
        std::string w;
        if (!(is_ >> w) || w != word) fail(ErrorKind::usage, "model archive: expected '" + word + "', got '" + w + "'");
    }
    template <typename T>
    T read() {
        T v{};
        if (!(is_ >> v)) fail(ErrorKind::usage, "model archive: truncated or malformed value");
        return v;
    }
    double read_double() {
        // istream >> double rejects subnormals on some libraries; parse the token instead
        const auto token = read<std::string>();
        try {
            std::size_t used = 0;
            const double v = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            return v;
        } catch (const std::logic_error&) {
            fail(ErrorKind::usage, "model archive: bad number '" + token + "'");
        }
    }

    Mlp read_network(const std::string& tag) {
        expect(tag);
        const auto act = parse_activation(read<std::string>());
        if (!act) fail(ErrorKind::usage, "model archive: unknown activation");
        const auto count = read<std::size_t>();
        std::vector<std::size_t> sizes(count);
        for (auto& s : sizes) s = read<std::size_t>();
        Mlp net(sizes, *act);
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            expect("weights");
            read<std::size_t>();
            for (auto& w : net.layers()[l].weights) w = read_double();
            expect("bias");
            read<std::size_t>();
            for (auto& b : net.layers()[l].bias) b = read_double();
        }
        return net;
    }

    BasisSpec read_basis_spec(const std::string& tag) {
        expect(tag);
        BasisSpec b;
        b.kind = read<std::string>();
        b.dimension = read<int>();
        b.degree = read<int>();
        b.points = read<int>();
        b.p = read_double();
        return b;
    }

private:
    std::istream& is_;
};

} // namespace detail

inline ModelArchive archive_of(const NeuralProjectionOperator& op, const TrainConfig& config) {
    return {op.network(),
            op.n(),
            op.m(),
            config,
            BasisSpec::of(op.input_basis(), op.input_weight().has_value()),
            BasisSpec::of(op.output_basis(), op.output_weight().has_value()),
            op.input_weight(),
            op.output_weight()};
}

/// Plain-text parameter dump; numbers use 17 significant digits so the archive round-trips bitwise.
inline void write_model(std::ostream& os, const ModelArchive& a) {
    os.precision(17);
    os << "# projop model v1\n"
       << "n " << a.n << '\n'
       << "m " << a.m << '\n'
       << "seed " << a.config.seed << '\n'
       << "config learning_rate " << a.config.learning_rate << " epochs " << a.config.epochs << " batch_size "
       << a.config.batch_size << " hidden_width " << a.config.hidden_width << " activation "
       << to_string(a.config.activation) << " loss_tolerance " << a.config.loss_tolerance << '\n';
    detail::write_basis_spec(os, "input_basis", a.input);
    detail::write_basis_spec(os, "output_basis", a.output);
    for (const auto& [tag, w] : {std::pair{"input_weight", &a.input_weight}, std::pair{"output_weight", &a.output_weight}}) {
        if (*w) {
            os << tag << "_seed " << (*w)->seed << '\n';
            detail::write_network(os, tag, (*w)->net);
        } else {
            os << tag << "_seed none\n";
        }
    }
    detail::write_network(os, "network", a.network);
}

inline ModelArchive read_model(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)) && line == "# projop model v1", ErrorKind::usage,
            "not a projop model archive");
    detail::ArchiveReader r(is);
    ModelArchive a;
    r.expect("n");
    a.n = r.read<std::size_t>();
    r.expect("m");
    a.m = r.read<std::size_t>();
    r.expect("seed");
    a.config.seed = r.read<std::uint64_t>();
    r.expect("config");
    r.expect("learning_rate");
    a.config.learning_rate = r.read_double();
    r.expect("epochs");
    a.config.epochs = r.read<int>();
    r.expect("batch_size");
    a.config.batch_size = r.read<std::size_t>();
    r.expect("hidden_width");
    a.config.hidden_width = r.read<std::size_t>();
    r.expect("activation");
    const auto act = parse_activation(r.read<std::string>());
    require(act.has_value(), ErrorKind::usage, "model archive: unknown activation");
    a.config.activation = *act;
    r.expect("loss_tolerance");
    a.config.loss_tolerance = r.read_double();
    a.input = r.read_basis_spec("input_basis");
    a.output = r.read_basis_spec("output_basis");
    for (const auto& [tag, w] : {std::pair{std::string("input_weight"), &a.input_weight},
                                 std::pair{std::string("output_weight"), &a.output_weight}}) {
        r.expect(tag + "_seed");
        const auto seed = r.read<std::string>();
        if (seed == "none") continue;
        *w = WeightNet{r.read_network(tag), std::stoull(seed)};
    }
    a.network = r.read_network("network");
    return a;
}

namespace detail {

inline BasisPtr rebuild_basis(const BasisSpec& spec, const std::optional<WeightNet>& weight) {
    auto quad = build_quadrature(spec.dimension, spec.points);
    if (spec.kind == "weight-net") {
        require(weight.has_value(), ErrorKind::usage, "weight-net basis without a weight network");
        return std::make_shared<const OrthoPolyBasis>(weight_net_basis(*weight, spec.degree, quad, PNorm(spec.p)));
    }
    require(spec.kind == "legendre", ErrorKind::usage, "unknown basis kind '" + spec.kind + "'");
    return std::make_shared<const OrthoPolyBasis>(tensor_legendre(spec.dimension, spec.degree, quad, PNorm(spec.p)));
}

} // namespace detail

/// Rebuilds the bases named in the archive and reassembles the operator.
inline NeuralProjectionOperator restore_operator(const ModelArchive& a) {
    return {detail::rebuild_basis(a.input, a.input_weight),
            a.n,
            detail::rebuild_basis(a.output, a.output_weight),
            a.m,
            a.network,
            a.input_weight,
            a.output_weight};
}

} // namespace projop
