#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nullstate/packet.hpp"

namespace nullstate::neural {

class shape_error : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class divergence_error : public std::runtime_error {
public:
    divergence_error(std::size_t epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

double sigmoid(double x) noexcept;

/// Weights of one layer, row-major `outputs x (inputs + 1)`. The last column multiplies the
/// always-on unit of the previous layer and holds the negative bias.
struct Layer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;

    std::size_t stride() const noexcept { return inputs + 1; }
    double& at(std::size_t row, std::size_t col) { return weights[row * stride() + col]; }
    double at(std::size_t row, std::size_t col) const { return weights[row * stride() + col]; }
    double bias(std::size_t row) const { return -at(row, inputs); }
    friend bool operator==(const Layer&, const Layer&) = default;
};

// A bias floor of 5 holds every unit near zero at init; small weights cannot pull it out.
inline constexpr double kDefaultInitScale = 2.5;
inline constexpr double kDefaultBiasFloor = 5.0;
inline const std::vector<std::size_t> kDefaultWidths{19, 64, 64, 10};

class Network {
public:
    /// Non-bias weights uniform in [-init_scale, init_scale]; every bias set to `bias_floor`.
    static Network make(std::vector<std::size_t> widths, double bias_floor, std::uint64_t seed,
                        double init_scale = kDefaultInitScale);
    /// Folds explicit per-layer weight matrices (outputs x inputs) and biases.
    static Network from_explicit(std::vector<std::size_t> widths, const std::vector<std::vector<double>>& weights,
                                 const std::vector<std::vector<double>>& biases);

    const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    double bias_floor() const noexcept { return bias_floor_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t input_width() const noexcept { return widths_.front(); }
    std::size_t output_width() const noexcept { return widths_.back(); }

    /// Flat view over every weight, layer by layer, row-major.
    std::size_t parameter_count() const noexcept;
    double& parameter(std::size_t index);

    /// Zeroes every non-bias weight, leaving the folded biases.
    void clear_weights() noexcept;

    friend bool operator==(const Network&, const Network&) = default;
    friend Network read_checkpoint(std::string_view text);

private:
    std::vector<std::size_t> widths_;
    std::vector<Layer> layers_;
    double bias_floor_ = 0.0;
    std::uint64_t seed_ = 0;
};

/// Activations of every computed layer (input excluded), without the always-on unit.
struct ActivationTrace {
    std::vector<std::vector<double>> layers;
};

/// W a for one layer, with the always-on unit appended to `input`.
std::vector<double> pre_activation(const Layer& layer, std::span<const double> input);

ActivationTrace trace(const Network& net, std::span<const double> input);

struct ForwardResult {
    packet::OutputFrame candidate;
    ActivationTrace trace;
};

/// Runs the input through every layer and thresholds the final layer into an output frame.
ForwardResult forward(const Network& net, std::span<const double> input, double threshold = 0.5);

std::vector<double> input_bits(const packet::InputFrame& frame);
std::vector<double> output_bits(const packet::OutputFrame& out);
packet::OutputFrame decode_output_bits(std::span<const double> activations, double threshold);

struct TrainSample {
    std::vector<double> input;   // 19 bits
    std::vector<double> target;  // 10 bits
};

TrainSample make_sample(const packet::InputFrame& frame, const packet::OutputFrame& target);

/// say/write x n^2 over digits 0-9 under one context: 20 samples.
std::vector<TrainSample> square_lesson(packet::ContextCode context);

enum class Loss { mse, cross_entropy };

struct TrainConfig {
    double learning_rate = 0.3;
    std::size_t epochs = 1000;
    std::uint64_t seed = 1;
    Loss loss = Loss::cross_entropy;
    double threshold = 0.5;
};

struct EpochStats {
    std::size_t epoch;
    double loss;
    double accuracy;
};

struct TrainResult {
    Network net;
    std::vector<EpochStats> history;
    bool converged = false;
    std::size_t epochs_run = 0;
};

double sample_loss(const Network& net, const TrainSample& sample, Loss loss = Loss::cross_entropy);
/// d(sample_loss)/d(parameter), in the same flat order as Network::parameter.
std::vector<double> gradient(const Network& net, const TrainSample& sample, Loss loss = Loss::cross_entropy);
/// Fraction of samples whose thresholded output equals the target bits exactly.
double accuracy(const Network& net, std::span<const TrainSample> samples, double threshold = 0.5);

/// Online gradient descent, reshuffled every epoch, until every sample decodes correctly or
/// the budget runs out. Throws divergence_error on a non-finite loss.
TrainResult train(Network net, std::span<const TrainSample> samples, const TrainConfig& cfg);

struct NullVerdict {
    std::vector<bool> quiescent;  // one flag per traced layer
    std::optional<packet::Malformation> gate;
    bool null = false;
};

/// A layer is quiescent when every unit is below epsilon. The run is null when the final layer
/// is quiescent or the thresholded output fails the well-formedness gate.
NullVerdict detect_null(const ActivationTrace& trace, double epsilon, double threshold = 0.5);

inline constexpr double kFiniteDifferenceStep = 1e-5;
// Central differences carry ~1e-11 of roundoff, so gradients below this are compared absolutely.
inline constexpr double kGradCheckFloor = 1e-6;

/// Largest relative error between the analytic gradient and central finite differences.
double grad_check(const Network& net, const TrainSample& sample, Loss loss = Loss::cross_entropy);

std::string write_checkpoint(const Network& net);
/// Lines starting with '#' are ignored.
Network read_checkpoint(std::string_view text);

}  // namespace nullstate::neural
