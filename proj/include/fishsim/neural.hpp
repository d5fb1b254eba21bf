#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fishsim/rng.hpp"

namespace fishsim {

using Mat = Eigen::MatrixXd;
using ColVec = Eigen::VectorXd;

enum class Activation { none, relu, tanh_fn };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);

/// Flat storage for all parameters and their gradients. Layers register
/// named blocks and get matrix views; the optimizer, checkpoints and the
/// finite-difference tests see one contiguous vector.
class ParameterStore {
public:
    struct Block {
        std::string name;
        std::size_t offset = 0;
        std::size_t rows = 0, cols = 0;
        std::size_t size() const { return rows * cols; }
    };

    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

    Eigen::Map<Mat> value(std::size_t block);
    Eigen::Map<const Mat> value(std::size_t block) const;
    Eigen::Map<Mat> grad(std::size_t block);

    std::size_t size() const { return values_.size(); }
    const std::vector<Block>& blocks() const { return blocks_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    double* grad_data() { return grads_.data(); }

    void zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

private:
    std::vector<Block> blocks_;
    std::vector<double> values_;
    std::vector<double> grads_;
};

struct DenseLayer {
    int in = 0, out = 0;
    Activation act = Activation::none;
    std::size_t w = 0, b = 0;

    struct Cache {
        Mat x, pre, y;
        bool valid = false;
    };

    static DenseLayer make(ParameterStore& ps, const std::string& name, int in, int out,
                           Activation act);
    void init(ParameterStore& ps, Rng& rng) const;
    /// x is (in x batch); returns (out x batch).
    Mat forward(const Mat& x, const ParameterStore& ps, Cache& cache) const;
    /// dy is (out x batch); accumulates parameter grads, returns dx.
    Mat backward(const Mat& dy, ParameterStore& ps, Cache& cache) const;
};

/// LSTM recurrence of width `hidden` with an output projection to `out`
/// (activation applied to the projection). Gates are packed row-wise as
/// [input; forget; output; candidate]. When project_all_steps is false only
/// the final step is projected (many-to-one).
struct LstmLayer {
    int in = 0, hidden = 0, out = 0;
    Activation proj_act = Activation::relu;
    bool project_all_steps = true;
    std::size_t wx = 0, wh = 0, b = 0, pw = 0, pb = 0;

    struct Cache {
        std::vector<Mat> x, i, f, o, g, c, tanh_c, h;
        std::vector<Mat> proj_pre, proj_y;
        bool valid = false;
    };

    static LstmLayer make(ParameterStore& ps, const std::string& name, int in, int hidden, int out,
                          Activation proj_act, bool project_all_steps);
    void init(ParameterStore& ps, Rng& rng) const;
    /// xs: window of (in x batch) matrices; cell/hidden start at zero.
    /// Returns the projected steps (all of them, or just the last).
    std::vector<Mat> forward(const std::vector<Mat>& xs, const ParameterStore& ps,
                             Cache& cache) const;
    /// dys matches the forward output shape. Returns d(xs).
    std::vector<Mat> backward(const std::vector<Mat>& dys, ParameterStore& ps, Cache& cache) const;
};

/// Per-step Gaussian negative log-likelihood. eps is the (mu - target)
/// error, sigma the predicted standard deviations.
double nll_loss(double eps_x, double eps_y, double sigma_x, double sigma_y);

struct NllBatch {
    double loss = 0.0; // mean over the batch
    Mat dz;            // gradient w.r.t. z = (mu_x, mu_y, log sigma_x, log sigma_y)
};

/// z is (4 x batch) holding (mu_x, mu_y, log sigma_x, log sigma_y); target is
/// (2 x batch) of accelerations.
NllBatch gaussian_nll(const Mat& z, const Mat& target);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double decay = 1e-4; // lr_t = lr / (1 + decay * step)
};

class Adam {
public:
    Adam(const AdamConfig& cfg, std::size_t param_count);
    /// Applies store gradients to store values. One call = one step.
    void step(ParameterStore& ps);
    long steps_taken() const { return step_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    long step_ = 0;
};

} // namespace fishsim
