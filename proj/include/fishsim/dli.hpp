#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fishsim/neural.hpp"
#include "fishsim/state.hpp"
#include "fishsim/trajectory.hpp"

namespace fishsim {

/// Layer widths of the interaction network. The defaults are the recurrent
/// model; mli_topology() gives the memoryless ablation (window 1, both
/// recurrent blocks replaced by dense layers of the same output width).
struct DliTopology {
    int input_width = 11;
    int window = 5;
    int lstm_hidden = 256;
    int lstm_out = 128;
    int mid = 64;
    int output = 4;
    bool mli = false;

    void validate() const;
    bool operator==(const DliTopology&) const = default;
};

DliTopology mli_topology();

struct GaussianAccelPrediction {
    Vec2 mu;
    Vec2 sigma;
};

/// Pack a pair state into the network input layout
/// [x_i, y_i, vx_i, vy_i, rw_i, x_j, y_j, vx_j, vy_j, rw_j, d_ij].
/// States are expected in normalized units.
std::array<double, 11> build_state_vector(const AgentState& s_i, const AgentState& s_j,
                                          double d_ij);

/// The acceleration predictor: a stack of recurrent and dense layers mapping
/// a window of pair states to (mu_x, mu_y, log sigma_x, log sigma_y).
class AccelNet {
public:
    explicit AccelNet(const DliTopology& topo);

    void init_params(std::uint64_t seed);

    const DliTopology& topology() const { return topo_; }
    ParameterStore& params() { return ps_; }
    const ParameterStore& params() const { return ps_; }

    /// Per-call forward/backward caches, reusable across batches.
    struct Workspace {
        LstmLayer::Cache lstm1, lstm2;
        std::vector<DenseLayer::Cache> step1, step2; // per-window-step dense caches
        DenseLayer::Cache head1, head2, head3;
        std::vector<DenseLayer::Cache> mli_stack;
    };

    /// window: topology().window matrices of (11 x batch). Returns (4 x batch)
    /// raw outputs (mu_x, mu_y, log sigma_x, log sigma_y).
    Mat forward(const std::vector<Mat>& window, Workspace& ws) const;

    /// dz matches forward's output; accumulates parameter gradients.
    void backward(const Mat& dz, Workspace& ws);

private:
    DliTopology topo_;
    ParameterStore ps_;
    LstmLayer lstm1_, lstm2_;
    DenseLayer step_dense1_, step_dense2_;   // applied to every window step
    DenseLayer head1_, head2_, head3_;       // after the second recurrent block
    std::vector<DenseLayer> mli_stack_;      // dense-only ablation
};

/// One-step probabilistic prediction from a window of pair states
/// (length must equal the topology window). sigma = exp(raw output).
GaussianAccelPrediction predict(const AccelNet& net, const std::vector<SystemState>& window);

/// Training pairs extracted from a normalized trajectory. Column s of
/// `inputs` holds the window flattened step-major (rows [11t, 11t+11) are
/// step t); `targets` holds the next-tick acceleration in normalized units.
struct SampleSet {
    Mat inputs;
    Mat targets;
    long skipped_segments = 0;

    std::size_t size() const { return static_cast<std::size_t>(targets.cols()); }
};

SampleSet make_samples(const Trajectory& traj, int window);

struct EpochLoss {
    long epoch = 0; // 1-based
    double train_nll = 0.0;
    double val_nll = 0.0;
};

struct TrainConfig {
    long epochs = 45;
    long batch = 512;
    std::uint64_t seed = 0;
    AdamConfig adam;
    std::function<void(const EpochLoss&)> on_epoch; // progress hook
};

struct TrainResult {
    std::vector<EpochLoss> history;
    long best_epoch = 0; // 0 when no epoch ran
    double best_val_nll = 0.0;
    std::vector<double> best_params; // snapshot at the best validation epoch
};

/// Minibatch NLL training with per-epoch seeded shuffling. The net is left
/// holding the final-epoch parameters; the best-validation snapshot is in
/// the result.
TrainResult train(AccelNet& net, const SampleSet& train_set, const SampleSet& val_set,
                  const TrainConfig& cfg);

void write_loss_history(const std::string& path, const std::vector<EpochLoss>& history);

void save_checkpoint(const std::string& path, const AccelNet& net, std::uint64_t train_seed,
                     long epoch);
void save_checkpoint(const std::string& path, const DliTopology& topo,
                     const std::vector<double>& params, std::uint64_t train_seed, long epoch);

struct LoadedCheckpoint {
    DliTopology topology;
    std::vector<double> params;
    std::uint64_t train_seed = 0;
    long epoch = 0;
};

LoadedCheckpoint read_checkpoint(const std::string& path);

/// Rebuild a net from a checkpoint, validating the stored blocks against the
/// topology's layer layout.
AccelNet load_checkpoint(const std::string& path, LoadedCheckpoint* meta = nullptr);

} // namespace fishsim
