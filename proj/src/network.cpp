#include "nullstate/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "nullstate/symbolic.hpp"

namespace nullstate::neural {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void require_width(std::span<const double> v, std::size_t n, const char* what) {
    if (v.size() != n) {
        throw shape_error(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(n));
    }
}

// Forward pass keeping the input as activations[0].
std::vector<std::vector<double>> activations(const Network& net, std::span<const double> input) {
    require_width(input, net.input_width(), "input");
    std::vector<std::vector<double>> acts;
    acts.reserve(net.layers().size() + 1);
    acts.emplace_back(input.begin(), input.end());
    for (const auto& layer : net.layers()) {
        auto z = pre_activation(layer, acts.back());
        for (auto& v : z) v = sigmoid(v);
        acts.push_back(std::move(z));
    }
    return acts;
}

double loss_of(std::span<const double> out, std::span<const double> target, Loss loss) {
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (loss == Loss::mse) {
            const double d = out[i] - target[i];
            total += d * d;
        } else {
            total -= target[i] * std::log(out[i]) + (1.0 - target[i]) * std::log1p(-out[i]);
        }
    }
    return total / static_cast<double>(out.size());
}

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

Network Network::make(std::vector<std::size_t> widths, double bias_floor, std::uint64_t seed, double init_scale) {
    if (widths.size() < 2) throw shape_error("a network needs at least an input and an output layer");
    if (std::ranges::any_of(widths, [](std::size_t w) { return w == 0; })) throw shape_error("zero-width layer");
    if (!(bias_floor > 0.0)) throw shape_error("bias floor must be positive");

    Network net;
    net.widths_ = std::move(widths);
    net.bias_floor_ = bias_floor;
    net.seed_ = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 1; l < net.widths_.size(); ++l) {
        Layer layer{net.widths_[l - 1], net.widths_[l], {}};
        layer.weights.resize(layer.outputs * layer.stride());
        for (std::size_t i = 0; i < layer.outputs; ++i) {
            for (std::size_t j = 0; j < layer.inputs; ++j) layer.at(i, j) = init_scale * (2.0 * uniform01(rng) - 1.0);
            layer.at(i, layer.inputs) = -bias_floor;
        }
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

Network Network::from_explicit(std::vector<std::size_t> widths, const std::vector<std::vector<double>>& weights,
                               const std::vector<std::vector<double>>& biases) {
    if (widths.size() < 2 || weights.size() != widths.size() - 1 || biases.size() != weights.size()) {
        throw shape_error("explicit weights/biases do not match the layer count");
    }
    Network net;
    net.widths_ = std::move(widths);
    net.bias_floor_ = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l < net.widths_.size(); ++l) {
        Layer layer{net.widths_[l - 1], net.widths_[l], {}};
        require_width(weights[l - 1], layer.outputs * layer.inputs, "weight matrix");
        require_width(biases[l - 1], layer.outputs, "bias vector");
        layer.weights.resize(layer.outputs * layer.stride());
        for (std::size_t i = 0; i < layer.outputs; ++i) {
            for (std::size_t j = 0; j < layer.inputs; ++j) layer.at(i, j) = weights[l - 1][i * layer.inputs + j];
            layer.at(i, layer.inputs) = -biases[l - 1][i];
            net.bias_floor_ = std::min(net.bias_floor_, biases[l - 1][i]);
        }
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

std::size_t Network::parameter_count() const noexcept {
    return std::accumulate(layers_.begin(), layers_.end(), std::size_t{0},
                           [](std::size_t n, const Layer& l) { return n + l.weights.size(); });
}

double& Network::parameter(std::size_t index) {
    for (auto& layer : layers_) {
        if (index < layer.weights.size()) return layer.weights[index];
        index -= layer.weights.size();
    }
    throw shape_error("parameter index out of range");
}

void Network::clear_weights() noexcept {
    for (auto& layer : layers_) {
        for (std::size_t i = 0; i < layer.outputs; ++i) {
            for (std::size_t j = 0; j < layer.inputs; ++j) layer.at(i, j) = 0.0;
        }
    }
}

std::vector<double> pre_activation(const Layer& layer, std::span<const double> input) {
    require_width(input, layer.inputs, "layer input");
    std::vector<double> z(layer.outputs);
    for (std::size_t i = 0; i < layer.outputs; ++i) {
        const double* row = &layer.weights[i * layer.stride()];
        double sum = row[layer.inputs];  // always-on unit
        for (std::size_t j = 0; j < layer.inputs; ++j) sum += row[j] * input[j];
        z[i] = sum;
    }
    return z;
}

ActivationTrace trace(const Network& net, std::span<const double> input) {
    auto acts = activations(net, input);
    acts.erase(acts.begin());
    return ActivationTrace{std::move(acts)};
}

ForwardResult forward(const Network& net, std::span<const double> input, double threshold) {
    auto t = trace(net, input);
    auto candidate = decode_output_bits(t.layers.back(), threshold);
    return ForwardResult{candidate, std::move(t)};
}

std::vector<double> input_bits(const packet::InputFrame& frame) {
    const auto bits = packet::pack(frame);
    std::vector<double> v(packet::kInputBits);
    for (int i = 0; i < packet::kInputBits; ++i) v[static_cast<std::size_t>(i)] = (bits >> (packet::kInputBits - 1 - i)) & 1u;
    return v;
}

std::vector<double> output_bits(const packet::OutputFrame& out) {
    const auto text = packet::encode_output(out);
    std::vector<double> v(text.size());
    std::ranges::transform(text, v.begin(), [](char c) { return c == '1' ? 1.0 : 0.0; });
    return v;
}

packet::OutputFrame decode_output_bits(std::span<const double> activations, double threshold) {
    if (activations.size() != static_cast<std::size_t>(packet::kOutputBits)) {
        throw shape_error("output layer must be " + std::to_string(packet::kOutputBits) + " wide");
    }
    packet::OutputFrame out;
    for (std::size_t i = 0; i < activations.size(); ++i) {
        const std::uint64_t bit = activations[i] > threshold ? 1 : 0;
        if (i < static_cast<std::size_t>(packet::kVerbBits)) {
            out.verb = (out.verb << 1) | bit;
        } else {
            out.value = (out.value << 1) | bit;
        }
    }
    return out;
}

TrainSample make_sample(const packet::InputFrame& frame, const packet::OutputFrame& target) {
    return TrainSample{input_bits(frame), output_bits(target)};
}

std::vector<TrainSample> square_lesson(packet::ContextCode context) {
    std::vector<TrainSample> samples;
    for (auto verb : packet::kAllVerbs) {
        for (std::uint8_t n = 0; n <= packet::kMaxDigit; ++n) {
            const packet::InputFrame frame{context, verb, packet::Func::square, n, 0};
            samples.push_back(make_sample(frame, *symbolic::oracle_answer(frame)));
        }
    }
    return samples;
}

double sample_loss(const Network& net, const TrainSample& sample, Loss loss) {
    const auto acts = activations(net, sample.input);
    require_width(sample.target, net.output_width(), "target");
    return loss_of(acts.back(), sample.target, loss);
}

std::vector<double> gradient(const Network& net, const TrainSample& sample, Loss loss) {
    const auto acts = activations(net, sample.input);
    require_width(sample.target, net.output_width(), "target");
    const auto& layers = net.layers();
    const auto& out = acts.back();
    const double m = static_cast<double>(out.size());

    std::vector<double> delta(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double diff = out[i] - sample.target[i];
        delta[i] = loss == Loss::mse ? 2.0 * diff / m * out[i] * (1.0 - out[i]) : diff / m;
    }

    std::vector<std::vector<double>> per_layer(layers.size());
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        const auto& prev = acts[l];
        auto& g = per_layer[l];
        g.resize(layer.weights.size());
        for (std::size_t i = 0; i < layer.outputs; ++i) {
            for (std::size_t j = 0; j < layer.inputs; ++j) g[i * layer.stride() + j] = delta[i] * prev[j];
            g[i * layer.stride() + layer.inputs] = delta[i];
        }
        if (l == 0) break;
        std::vector<double> next(layer.inputs, 0.0);
        for (std::size_t j = 0; j < layer.inputs; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < layer.outputs; ++i) sum += layer.at(i, j) * delta[i];
            next[j] = sum * prev[j] * (1.0 - prev[j]);
        }
        delta = std::move(next);
    }

    std::vector<double> flat;
    flat.reserve(net.parameter_count());
    for (const auto& g : per_layer) flat.insert(flat.end(), g.begin(), g.end());
    return flat;
}

double accuracy(const Network& net, std::span<const TrainSample> samples, double threshold) {
    if (samples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& s : samples) {
        const auto out = trace(net, s.input).layers.back();
        bool ok = true;
        for (std::size_t i = 0; i < out.size() && ok; ++i) ok = (out[i] > threshold) == (s.target[i] > 0.5);
        correct += ok;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainResult train(Network net, std::span<const TrainSample> samples, const TrainConfig& cfg) {
    if (samples.empty()) throw shape_error("training needs at least one sample");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0,1)");
    for (const auto& s : samples) {
        require_width(s.input, net.input_width(), "sample input");
        require_width(s.target, net.output_width(), "sample target");
    }

    TrainResult result{std::move(net), {}, false, 0};
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    result.converged = accuracy(result.net, samples, cfg.threshold) == 1.0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs && !result.converged; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        for (std::size_t idx : order) {
            const auto g = gradient(result.net, samples[idx], cfg.loss);
            std::size_t k = 0;
            for (auto& layer : result.net.layers()) {
                for (auto& w : layer.weights) w -= cfg.learning_rate * g[k++];
            }
        }

        double total = 0.0;
        for (const auto& s : samples) total += sample_loss(result.net, s, cfg.loss);
        const double mean_loss = total / static_cast<double>(samples.size());
        if (!std::isfinite(mean_loss)) {
            throw divergence_error(epoch, "loss became non-finite at epoch " + std::to_string(epoch));
        }
        const double acc = accuracy(result.net, samples, cfg.threshold);
        result.history.push_back({epoch, mean_loss, acc});
        result.epochs_run = epoch;
        result.converged = acc == 1.0;
    }
    return result;
}

NullVerdict detect_null(const ActivationTrace& t, double epsilon, double threshold) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 0.5)");
    if (t.layers.empty()) throw shape_error("empty activation trace");
    NullVerdict v;
    for (const auto& layer : t.layers) {
        const double peak = layer.empty() ? 0.0 : *std::ranges::max_element(layer);
        v.quiescent.push_back(peak < epsilon);
    }
    if (t.layers.back().size() == static_cast<std::size_t>(packet::kOutputBits)) {
        v.gate = packet::validate_output(decode_output_bits(t.layers.back(), threshold));
    }
    v.null = v.quiescent.back() || v.gate.has_value();
    return v;
}

double grad_check(const Network& net, const TrainSample& sample, Loss loss) {
    const auto analytic = gradient(net, sample, loss);
    Network probe = net;
    double worst = 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        double& w = probe.parameter(k);
        const double saved = w;
        w = saved + kFiniteDifferenceStep;
        const double up = sample_loss(probe, sample, loss);
        w = saved - kFiniteDifferenceStep;
        const double down = sample_loss(probe, sample, loss);
        w = saved;
        const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
        const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), kGradCheckFloor});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
    }
    return worst;
}

std::string write_checkpoint(const Network& net) {
    std::ostringstream out;
    out << "nullstate-checkpoint 1\nwidths";
    for (auto w : net.widths()) out << ' ' << w;
    out << "\nbias_floor " << format_double(net.bias_floor()) << "\nseed " << net.seed() << '\n';
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        out << "layer " << l + 1 << ' ' << layer.outputs << ' ' << layer.stride() << '\n';
        for (std::size_t i = 0; i < layer.outputs; ++i) {
            for (std::size_t j = 0; j < layer.stride(); ++j) out << (j ? " " : "") << format_double(layer.at(i, j));
            out << '\n';
        }
    }
    return out.str();
}

Network read_checkpoint(std::string_view text) {
    std::string body;
    {
        std::istringstream raw{std::string(text)};
        for (std::string line; std::getline(raw, line);) {
            if (!line.starts_with('#')) body += line + '\n';
        }
    }
    std::istringstream in{body};
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "nullstate-checkpoint" || version != 1) {
        throw shape_error("not a nullstate checkpoint");
    }
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::istringstream widths_line(line);
    widths_line >> tag;
    if (tag != "widths") throw shape_error("checkpoint: missing widths");
    std::vector<std::size_t> widths;
    for (std::size_t w; widths_line >> w;) widths.push_back(w);

    auto read_number = [](const std::string& token) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) throw shape_error("checkpoint: bad number '" + token + "'");
        return v;
    };

    std::string value;
    if (!(in >> tag >> value) || tag != "bias_floor") throw shape_error("checkpoint: missing bias_floor");
    const double bias_floor = read_number(value);
    std::uint64_t seed = 0;
    if (!(in >> tag >> seed) || tag != "seed") throw shape_error("checkpoint: missing seed");

    if (widths.size() < 2 || std::ranges::any_of(widths, [](std::size_t w) { return w == 0; })) {
        throw shape_error("checkpoint: bad widths");
    }
    Network net;
    net.widths_ = widths;
    net.bias_floor_ = bias_floor;
    net.seed_ = seed;
    for (std::size_t l = 1; l < widths.size(); ++l) {
        net.layers_.push_back(Layer{widths[l - 1], widths[l], std::vector<double>(widths[l] * (widths[l - 1] + 1))});
    }
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        std::size_t index = 0, rows = 0, cols = 0;
        if (!(in >> tag >> index >> rows >> cols) || tag != "layer" || index != l + 1 || rows != layer.outputs ||
            cols != layer.stride()) {
            throw shape_error("checkpoint: layer header mismatch at layer " + std::to_string(l + 1));
        }
        for (auto& w : layer.weights) {
            if (!(in >> value)) throw shape_error("checkpoint: truncated weights");
            w = read_number(value);
        }
    }
    return net;
}

}  // namespace nullstate::neural
