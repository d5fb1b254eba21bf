#include "fishsim/dli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fishsim {

void DliTopology::validate() const {
    if (input_width < 1 || window < 1 || lstm_hidden < 1 || lstm_out < 1 || mid < 1)
        throw std::invalid_argument("DliTopology: widths must be positive");
    if (output != 4)
        throw std::invalid_argument("DliTopology: output dimension must be 4");
    if (mli && window != 1)
        throw std::invalid_argument("DliTopology: the memoryless variant uses a window of 1");
}

DliTopology mli_topology() {
    DliTopology t;
    t.window = 1;
    t.mli = true;
    return t;
}

std::array<double, 11> build_state_vector(const AgentState& s_i, const AgentState& s_j,
                                          double d_ij) {
    std::array<double, 11> v{s_i.pos.x,  s_i.pos.y, s_i.vel.x, s_i.vel.y,
                             s_i.wall_dist, s_j.pos.x, s_j.pos.y, s_j.vel.x,
                             s_j.vel.y,  s_j.wall_dist, d_ij};
    for (double x : v)
        if (!std::isfinite(x))
            throw std::invalid_argument("build_state_vector: non-finite state field");
    return v;
}

AccelNet::AccelNet(const DliTopology& topo) : topo_(topo) {
    topo_.validate();
    if (topo_.mli) {
        const int widths[8] = {topo_.input_width, topo_.lstm_out, topo_.mid, topo_.mid,
                               topo_.lstm_out,    topo_.mid,      topo_.mid, topo_.output};
        const Activation acts[7] = {Activation::relu, Activation::relu, Activation::tanh_fn,
                                    Activation::relu, Activation::relu, Activation::tanh_fn,
                                    Activation::none};
        for (int k = 0; k < 7; ++k)
            mli_stack_.push_back(DenseLayer::make(ps_, "mli" + std::to_string(k), widths[k],
                                                  widths[k + 1], acts[k]));
    } else {
        lstm1_ = LstmLayer::make(ps_, "lstm1", topo_.input_width, topo_.lstm_hidden,
                                 topo_.lstm_out, Activation::relu, true);
        step_dense1_ =
            DenseLayer::make(ps_, "step_dense1", topo_.lstm_out, topo_.mid, Activation::relu);
        step_dense2_ =
            DenseLayer::make(ps_, "step_dense2", topo_.mid, topo_.mid, Activation::tanh_fn);
        lstm2_ = LstmLayer::make(ps_, "lstm2", topo_.mid, topo_.lstm_hidden, topo_.lstm_out,
                                 Activation::relu, false);
        head1_ = DenseLayer::make(ps_, "head1", topo_.lstm_out, topo_.mid, Activation::relu);
        head2_ = DenseLayer::make(ps_, "head2", topo_.mid, topo_.mid, Activation::tanh_fn);
        head3_ = DenseLayer::make(ps_, "head3", topo_.mid, topo_.output, Activation::none);
    }
}

void AccelNet::init_params(std::uint64_t seed) {
    Rng rng(seed, "net-init");
    if (topo_.mli) {
        for (const auto& l : mli_stack_)
            l.init(ps_, rng);
    } else {
        lstm1_.init(ps_, rng);
        step_dense1_.init(ps_, rng);
        step_dense2_.init(ps_, rng);
        lstm2_.init(ps_, rng);
        head1_.init(ps_, rng);
        head2_.init(ps_, rng);
        head3_.init(ps_, rng);
    }
}

Mat AccelNet::forward(const std::vector<Mat>& window, Workspace& ws) const {
    if (window.size() != static_cast<std::size_t>(topo_.window))
        throw std::invalid_argument("AccelNet::forward: expected a window of " +
                                    std::to_string(topo_.window) + " steps, got " +
                                    std::to_string(window.size()));
    if (topo_.mli) {
        ws.mli_stack.resize(mli_stack_.size());
        Mat y = window[0];
        for (std::size_t k = 0; k < mli_stack_.size(); ++k)
            y = mli_stack_[k].forward(y, ps_, ws.mli_stack[k]);
        return y;
    }
    const std::size_t T = window.size();
    std::vector<Mat> h = lstm1_.forward(window, ps_, ws.lstm1);
    ws.step1.resize(T);
    ws.step2.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        h[t] = step_dense1_.forward(h[t], ps_, ws.step1[t]);
        h[t] = step_dense2_.forward(h[t], ps_, ws.step2[t]);
    }
    Mat y = lstm2_.forward(h, ps_, ws.lstm2)[0];
    y = head1_.forward(y, ps_, ws.head1);
    y = head2_.forward(y, ps_, ws.head2);
    return head3_.forward(y, ps_, ws.head3);
}

void AccelNet::backward(const Mat& dz, Workspace& ws) {
    if (topo_.mli) {
        Mat d = dz;
        for (std::size_t k = mli_stack_.size(); k-- > 0;)
            d = mli_stack_[k].backward(d, ps_, ws.mli_stack[k]);
        return;
    }
    Mat d = head3_.backward(dz, ps_, ws.head3);
    d = head2_.backward(d, ps_, ws.head2);
    d = head1_.backward(d, ps_, ws.head1);
    std::vector<Mat> dh = lstm2_.backward({d}, ps_, ws.lstm2);
    for (std::size_t t = 0; t < dh.size(); ++t) {
        dh[t] = step_dense2_.backward(dh[t], ps_, ws.step2[t]);
        dh[t] = step_dense1_.backward(dh[t], ps_, ws.step1[t]);
    }
    lstm1_.backward(dh, ps_, ws.lstm1);
}

GaussianAccelPrediction predict(const AccelNet& net, const std::vector<SystemState>& window) {
    const int W = net.topology().window;
    if (window.size() != static_cast<std::size_t>(W))
        throw std::invalid_argument("predict: window must hold exactly " + std::to_string(W) +
                                    " states");
    std::vector<Mat> xs(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        auto v = build_state_vector(window[t].focal, window[t].neighbor, window[t].distance);
        xs[t] = Eigen::Map<const Mat>(v.data(), 11, 1);
    }
    AccelNet::Workspace ws;
    Mat z = net.forward(xs, ws);
    GaussianAccelPrediction p;
    p.mu = {z(0, 0), z(1, 0)};
    p.sigma = {std::exp(z(2, 0)), std::exp(z(3, 0))};
    return p;
}

SampleSet make_samples(const Trajectory& traj, int window) {
    traj.validate();
    if (window < 1)
        throw std::invalid_argument("make_samples: window must be positive");
    if (std::abs(traj.scale_cm - traj.arena.radius_cm) > 1e-9 * traj.arena.radius_cm)
        throw std::invalid_argument("make_samples: trajectory must be in normalized units");
    if (traj.agent_count() != 2)
        throw std::invalid_argument("make_samples: expected a two-agent trajectory");

    const double dt = traj.arena.dt_s;
    const int W = window;

    std::size_t total = 0;
    long skipped = 0;
    for (const auto& seg : traj.segments) {
        long t = static_cast<long>(seg.frames());
        if (t >= W + 2)
            total += 2 * static_cast<std::size_t>(t - W - 1);
        else
            ++skipped;
    }

    SampleSet set;
    set.skipped_segments = skipped;
    set.inputs = Mat(11 * W, static_cast<Eigen::Index>(total));
    set.targets = Mat(2, static_cast<Eigen::Index>(total));

    Eigen::Index col = 0;
    for (const auto& seg : traj.segments) {
        const long T = static_cast<long>(seg.frames());
        if (T < W + 2)
            continue;
        std::array<std::vector<Vec2>, 2> vel = {backward_velocities(seg.agents[0], dt),
                                                backward_velocities(seg.agents[1], dt)};
        // velocity of frame k (k >= 1) is vel[a][k-1]
        for (int focal = 0; focal < 2; ++focal) {
            const int other = 1 - focal;
            for (long m = W; m <= T - 2; ++m) {
                for (int t = 0; t < W; ++t) {
                    long frame = m - W + 1 + t;
                    AgentState si(seg.agents[focal][frame], vel[focal][frame - 1], 1.0);
                    AgentState sj(seg.agents[other][frame], vel[other][frame - 1], 1.0);
                    auto v = build_state_vector(si, sj, (sj.pos - si.pos).norm());
                    for (int k = 0; k < 11; ++k)
                        set.inputs(11 * t + k, col) = v[k];
                }
                Vec2 a = (vel[focal][m] - vel[focal][m - 1]) / dt;
                set.targets(0, col) = a.x;
                set.targets(1, col) = a.y;
                ++col;
            }
        }
    }
    if (col != set.targets.cols())
        throw std::logic_error("make_samples: sample count mismatch");
    return set;
}

namespace {

/// Slice sample columns `idx[lo, hi)` into per-step input matrices plus the
/// target block.
void gather_batch(const SampleSet& set, const std::vector<std::size_t>& idx, std::size_t lo,
                  std::size_t hi, int window, std::vector<Mat>& xs, Mat& target) {
    const Eigen::Index b = static_cast<Eigen::Index>(hi - lo);
    xs.resize(window);
    for (int t = 0; t < window; ++t)
        xs[t].resize(11, b);
    target.resize(2, b);
    for (std::size_t k = lo; k < hi; ++k) {
        const Eigen::Index src = static_cast<Eigen::Index>(idx[k]);
        const Eigen::Index dst = static_cast<Eigen::Index>(k - lo);
        for (int t = 0; t < window; ++t)
            xs[t].col(dst) = set.inputs.col(src).segment(11 * t, 11);
        target.col(dst) = set.targets.col(src);
    }
}

double eval_nll(const AccelNet& net, const SampleSet& set, long batch,
                AccelNet::Workspace& ws) {
    const int W = net.topology().window;
    const std::size_t n = set.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<Mat> xs;
    Mat target;
    double total = 0.0;
    for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(batch)) {
        std::size_t hi = std::min(n, lo + static_cast<std::size_t>(batch));
        gather_batch(set, idx, lo, hi, W, xs, target);
        NllBatch nb = gaussian_nll(net.forward(xs, ws), target);
        total += nb.loss * static_cast<double>(hi - lo);
    }
    return total / static_cast<double>(n);
}

} // namespace

TrainResult train(AccelNet& net, const SampleSet& train_set, const SampleSet& val_set,
                  const TrainConfig& cfg) {
    if (train_set.size() == 0)
        throw std::invalid_argument("train: empty training set");
    if (val_set.size() == 0)
        throw std::invalid_argument("train: empty validation set");
    if (cfg.batch < 1)
        throw std::invalid_argument("train: batch size must be positive");
    const int W = net.topology().window;
    if (train_set.inputs.rows() != 11 * W || val_set.inputs.rows() != 11 * W)
        throw std::invalid_argument("train: sample window does not match the network");

    TrainResult res;
    Adam adam(cfg.adam, net.params().size());
    AccelNet::Workspace ws;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Mat> xs;
    Mat target;

    for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(cfg.seed, "epoch-shuffle", static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double train_total = 0.0;
        const std::size_t n = order.size();
        for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(cfg.batch)) {
            std::size_t hi = std::min(n, lo + static_cast<std::size_t>(cfg.batch));
            gather_batch(train_set, order, lo, hi, W, xs, target);
            net.params().zero_grads();
            NllBatch nb = gaussian_nll(net.forward(xs, ws), target);
            if (!std::isfinite(nb.loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch offset " +
                                         std::to_string(lo));
            net.backward(nb.dz, ws);
            adam.step(net.params());
            train_total += nb.loss * static_cast<double>(hi - lo);
        }

        EpochLoss e;
        e.epoch = epoch;
        e.train_nll = train_total / static_cast<double>(n);
        e.val_nll = eval_nll(net, val_set, cfg.batch, ws);
        if (!std::isfinite(e.val_nll))
            throw std::runtime_error("train: non-finite validation loss at epoch " +
                                     std::to_string(epoch));
        res.history.push_back(e);

        if (res.best_epoch == 0 || e.val_nll < res.best_val_nll) {
            res.best_epoch = epoch;
            res.best_val_nll = e.val_nll;
            res.best_params.assign(net.params().data(),
                                   net.params().data() + net.params().size());
        }
        if (cfg.on_epoch)
            cfg.on_epoch(e);
    }
    if (res.best_epoch == 0)
        res.best_params.assign(net.params().data(), net.params().data() + net.params().size());
    return res;
}

void write_loss_history(const std::string& path, const std::vector<EpochLoss>& history) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path);
    std::fputs("epoch,train_nll,val_nll\n", f);
    for (const auto& e : history)
        std::fprintf(f, "%ld,%.10g,%.10g\n", e.epoch, e.train_nll, e.val_nll);
    std::fclose(f);
}

namespace {

constexpr const char* kCheckpointMagic = "fishsim-checkpoint";
constexpr int kCheckpointVersion = 1;

} // namespace

void save_checkpoint(const std::string& path, const DliTopology& topo,
                     const std::vector<double>& params, std::uint64_t train_seed, long epoch) {
    AccelNet ref(topo); // reproduces block layout for the header
    if (params.size() != ref.params().size())
        throw std::invalid_argument("save_checkpoint: parameter count does not match topology");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "%s %d\n", kCheckpointMagic, kCheckpointVersion);
    std::fprintf(f, "mli %d\n", topo.mli ? 1 : 0);
    std::fprintf(f, "input_width %d\n", topo.input_width);
    std::fprintf(f, "window %d\n", topo.window);
    std::fprintf(f, "lstm_hidden %d\n", topo.lstm_hidden);
    std::fprintf(f, "lstm_out %d\n", topo.lstm_out);
    std::fprintf(f, "mid %d\n", topo.mid);
    std::fprintf(f, "output %d\n", topo.output);
    std::fprintf(f, "train_seed %llu\n", static_cast<unsigned long long>(train_seed));
    std::fprintf(f, "epoch %ld\n", epoch);
    std::fprintf(f, "blocks %zu\n", ref.params().blocks().size());
    for (const auto& b : ref.params().blocks())
        std::fprintf(f, "block %s %zu %zu\n", b.name.c_str(), b.rows, b.cols);
    std::fprintf(f, "values %zu\n", params.size());
    for (double v : params)
        std::fprintf(f, "%.17g\n", v);
    std::fclose(f);
}

void save_checkpoint(const std::string& path, const AccelNet& net, std::uint64_t train_seed,
                     long epoch) {
    std::vector<double> params(net.params().data(), net.params().data() + net.params().size());
    save_checkpoint(path, net.topology(), params, train_seed, epoch);
}

LoadedCheckpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open checkpoint: " + path);
    auto fail = [&](const std::string& why) -> std::runtime_error {
        return std::runtime_error("bad checkpoint " + path + ": " + why);
    };

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kCheckpointMagic)
        throw fail("missing header");
    if (version != kCheckpointVersion)
        throw fail("unsupported version " + std::to_string(version));

    LoadedCheckpoint ck;
    auto read_field = [&](const char* name) -> long long {
        std::string key;
        long long value = 0;
        if (!(in >> key >> value) || key != name)
            throw fail(std::string("expected field ") + name);
        return value;
    };
    ck.topology.mli = read_field("mli") != 0;
    ck.topology.input_width = static_cast<int>(read_field("input_width"));
    ck.topology.window = static_cast<int>(read_field("window"));
    ck.topology.lstm_hidden = static_cast<int>(read_field("lstm_hidden"));
    ck.topology.lstm_out = static_cast<int>(read_field("lstm_out"));
    ck.topology.mid = static_cast<int>(read_field("mid"));
    ck.topology.output = static_cast<int>(read_field("output"));
    ck.train_seed = static_cast<std::uint64_t>(read_field("train_seed"));
    ck.epoch = static_cast<long>(read_field("epoch"));
    ck.topology.validate();

    AccelNet ref(ck.topology);
    const auto& blocks = ref.params().blocks();
    long long nblocks = read_field("blocks");
    if (nblocks != static_cast<long long>(blocks.size()))
        throw fail("block count does not match the topology");
    for (const auto& expect : blocks) {
        std::string key, name;
        std::size_t rows = 0, cols = 0;
        if (!(in >> key >> name >> rows >> cols) || key != "block")
            throw fail("truncated block table");
        if (name != expect.name || rows != expect.rows || cols != expect.cols)
            throw fail("block " + name + " does not match the topology layout");
    }

    long long nvalues = read_field("values");
    if (nvalues != static_cast<long long>(ref.params().size()))
        throw fail("value count does not match the topology");
    ck.params.resize(static_cast<std::size_t>(nvalues));
    for (auto& v : ck.params)
        if (!(in >> v))
            throw fail("truncated parameter list");
    return ck;
}

AccelNet load_checkpoint(const std::string& path, LoadedCheckpoint* meta) {
    LoadedCheckpoint ck = read_checkpoint(path);
    AccelNet net(ck.topology);
    std::copy(ck.params.begin(), ck.params.end(), net.params().data());
    if (meta)
        *meta = ck;
    return net;
}

} // namespace fishsim
