#include "fishsim/neural.hpp"

#include <cmath>
#include <stdexcept>

namespace fishsim {

Activation activation_from_string(const std::string& s) {
    if (s == "none")
        return Activation::none;
    if (s == "relu")
        return Activation::relu;
    if (s == "tanh")
        return Activation::tanh_fn;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string activation_to_string(Activation a) {
    switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::tanh_fn: return "tanh";
    }
    throw std::logic_error("bad activation enum");
}

namespace {

void apply_activation(Activation act, Mat& m) {
    switch (act) {
    case Activation::none:
        return;
    case Activation::relu:
        m = m.cwiseMax(0.0);
        return;
    case Activation::tanh_fn:
        m = m.array().tanh().matrix();
        return;
    }
}

/// dy -> d(pre) given the cached pre-activation and output.
Mat activation_backward(Activation act, const Mat& dy, const Mat& pre, const Mat& y) {
    switch (act) {
    case Activation::none:
        return dy;
    case Activation::relu:
        return (pre.array() > 0.0).cast<double>().matrix().cwiseProduct(dy);
    case Activation::tanh_fn:
        return (1.0 - y.array().square()).matrix().cwiseProduct(dy);
    }
    throw std::logic_error("bad activation enum");
}

Mat sigmoid(const Mat& m) {
    return (1.0 / (1.0 + (-m.array()).exp())).matrix();
}

} // namespace

std::size_t ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
    Block b;
    b.name = name;
    b.offset = values_.size();
    b.rows = rows;
    b.cols = cols;
    blocks_.push_back(b);
    values_.resize(values_.size() + rows * cols, 0.0);
    grads_.resize(values_.size(), 0.0);
    return blocks_.size() - 1;
}

Eigen::Map<Mat> ParameterStore::value(std::size_t block) {
    const Block& b = blocks_.at(block);
    return {values_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
            static_cast<Eigen::Index>(b.cols)};
}

Eigen::Map<const Mat> ParameterStore::value(std::size_t block) const {
    const Block& b = blocks_.at(block);
    return {values_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
            static_cast<Eigen::Index>(b.cols)};
}

Eigen::Map<Mat> ParameterStore::grad(std::size_t block) {
    const Block& b = blocks_.at(block);
    return {grads_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
            static_cast<Eigen::Index>(b.cols)};
}

namespace {

void fill_uniform(Eigen::Map<Mat> m, double bound, Rng& rng) {
    double* p = m.data();
    for (Eigen::Index k = 0; k < m.size(); ++k)
        p[k] = rng.uniform(-bound, bound);
}

} // namespace

DenseLayer DenseLayer::make(ParameterStore& ps, const std::string& name, int in, int out,
                            Activation act) {
    if (in <= 0 || out <= 0)
        throw std::invalid_argument("DenseLayer: dims must be positive");
    DenseLayer l;
    l.in = in;
    l.out = out;
    l.act = act;
    l.w = ps.add(name + ".w", out, in);
    l.b = ps.add(name + ".b", out, 1);
    return l;
}

void DenseLayer::init(ParameterStore& ps, Rng& rng) const {
    fill_uniform(ps.value(w), 1.0 / std::sqrt(static_cast<double>(in)), rng);
    ps.value(b).setZero();
}

Mat DenseLayer::forward(const Mat& x, const ParameterStore& ps, Cache& cache) const {
    if (x.rows() != in)
        throw std::invalid_argument("DenseLayer::forward: input has " + std::to_string(x.rows()) +
                                    " rows, expected " + std::to_string(in));
    cache.x = x;
    cache.pre.noalias() = ps.value(w) * x;
    cache.pre.colwise() += ps.value(b).col(0);
    cache.y = cache.pre;
    apply_activation(act, cache.y);
    cache.valid = true;
    return cache.y;
}

Mat DenseLayer::backward(const Mat& dy, ParameterStore& ps, Cache& cache) const {
    if (!cache.valid)
        throw std::logic_error("DenseLayer::backward: no forward cache");
    if (dy.rows() != out || dy.cols() != cache.x.cols())
        throw std::invalid_argument("DenseLayer::backward: gradient shape mismatch");
    Mat dpre = activation_backward(act, dy, cache.pre, cache.y);
    ps.grad(w).noalias() += dpre * cache.x.transpose();
    ps.grad(b).col(0).noalias() += dpre.rowwise().sum();
    Mat dx;
    dx.noalias() = ps.value(w).transpose() * dpre;
    return dx;
}

LstmLayer LstmLayer::make(ParameterStore& ps, const std::string& name, int in, int hidden, int out,
                          Activation proj_act, bool project_all_steps) {
    if (in <= 0 || hidden <= 0 || out <= 0)
        throw std::invalid_argument("LstmLayer: dims must be positive");
    LstmLayer l;
    l.in = in;
    l.hidden = hidden;
    l.out = out;
    l.proj_act = proj_act;
    l.project_all_steps = project_all_steps;
    l.wx = ps.add(name + ".wx", 4 * hidden, in);
    l.wh = ps.add(name + ".wh", 4 * hidden, hidden);
    l.b = ps.add(name + ".b", 4 * hidden, 1);
    l.pw = ps.add(name + ".pw", out, hidden);
    l.pb = ps.add(name + ".pb", out, 1);
    return l;
}

void LstmLayer::init(ParameterStore& ps, Rng& rng) const {
    fill_uniform(ps.value(wx), 1.0 / std::sqrt(static_cast<double>(in)), rng);
    fill_uniform(ps.value(wh), 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    ps.value(b).setZero();
    ps.value(b).col(0).segment(hidden, hidden).setOnes(); // forget gate bias
    fill_uniform(ps.value(pw), 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    ps.value(pb).setZero();
}

std::vector<Mat> LstmLayer::forward(const std::vector<Mat>& xs, const ParameterStore& ps,
                                    Cache& cache) const {
    if (xs.empty())
        throw std::invalid_argument("LstmLayer::forward: empty sequence");
    const std::size_t T = xs.size();
    const Eigen::Index B = xs[0].cols();
    const int H = hidden;
    cache = Cache{};
    cache.x = xs;
    cache.i.resize(T);
    cache.f.resize(T);
    cache.o.resize(T);
    cache.g.resize(T);
    cache.c.resize(T);
    cache.tanh_c.resize(T);
    cache.h.resize(T);

    Mat h_prev = Mat::Zero(H, B);
    Mat c_prev = Mat::Zero(H, B);
    for (std::size_t t = 0; t < T; ++t) {
        if (xs[t].rows() != in || xs[t].cols() != B)
            throw std::invalid_argument("LstmLayer::forward: input shape mismatch at step " +
                                        std::to_string(t));
        Mat z;
        z.noalias() = ps.value(wx) * xs[t];
        z.noalias() += ps.value(wh) * h_prev;
        z.colwise() += ps.value(b).col(0);
        cache.i[t] = sigmoid(z.topRows(H));
        cache.f[t] = sigmoid(z.middleRows(H, H));
        cache.o[t] = sigmoid(z.middleRows(2 * H, H));
        cache.g[t] = z.bottomRows(H).array().tanh().matrix();
        cache.c[t] = cache.f[t].cwiseProduct(c_prev) + cache.i[t].cwiseProduct(cache.g[t]);
        cache.tanh_c[t] = cache.c[t].array().tanh().matrix();
        cache.h[t] = cache.o[t].cwiseProduct(cache.tanh_c[t]);
        h_prev = cache.h[t];
        c_prev = cache.c[t];
    }

    std::vector<Mat> ys;
    auto project = [&](std::size_t t) {
        Mat pre;
        pre.noalias() = ps.value(pw) * cache.h[t];
        pre.colwise() += ps.value(pb).col(0);
        Mat y = pre;
        apply_activation(proj_act, y);
        cache.proj_pre.push_back(std::move(pre));
        cache.proj_y.push_back(y);
        ys.push_back(cache.proj_y.back());
    };
    if (project_all_steps)
        for (std::size_t t = 0; t < T; ++t)
            project(t);
    else
        project(T - 1);
    cache.valid = true;
    return ys;
}

std::vector<Mat> LstmLayer::backward(const std::vector<Mat>& dys, ParameterStore& ps,
                                     Cache& cache) const {
    if (!cache.valid)
        throw std::logic_error("LstmLayer::backward: no forward cache");
    const std::size_t T = cache.x.size();
    const Eigen::Index B = cache.x[0].cols();
    const int H = hidden;
    const std::size_t expected = project_all_steps ? T : 1;
    if (dys.size() != expected)
        throw std::invalid_argument("LstmLayer::backward: gradient count mismatch");

    std::vector<Mat> dh(T, Mat::Zero(H, B));
    for (std::size_t j = 0; j < dys.size(); ++j) {
        std::size_t t = project_all_steps ? j : T - 1;
        Mat dpre = activation_backward(proj_act, dys[j], cache.proj_pre[j], cache.proj_y[j]);
        ps.grad(pw).noalias() += dpre * cache.h[t].transpose();
        ps.grad(pb).col(0).noalias() += dpre.rowwise().sum();
        dh[t].noalias() += ps.value(pw).transpose() * dpre;
    }

    std::vector<Mat> dxs(T);
    Mat dc_next = Mat::Zero(H, B);
    Mat dh_next = Mat::Zero(H, B);
    for (std::size_t ti = T; ti-- > 0;) {
        Mat dht = dh[ti] + dh_next;
        Mat dc = dc_next +
                 dht.cwiseProduct(cache.o[ti])
                     .cwiseProduct((1.0 - cache.tanh_c[ti].array().square()).matrix());
        Mat do_ = dht.cwiseProduct(cache.tanh_c[ti]);
        Mat di = dc.cwiseProduct(cache.g[ti]);
        Mat dg = dc.cwiseProduct(cache.i[ti]);
        Mat df = ti > 0 ? Mat(dc.cwiseProduct(cache.c[ti - 1])) : Mat(Mat::Zero(H, B));

        Mat dz(4 * H, B);
        dz.topRows(H) =
            di.cwiseProduct(cache.i[ti]).cwiseProduct((1.0 - cache.i[ti].array()).matrix());
        dz.middleRows(H, H) =
            df.cwiseProduct(cache.f[ti]).cwiseProduct((1.0 - cache.f[ti].array()).matrix());
        dz.middleRows(2 * H, H) =
            do_.cwiseProduct(cache.o[ti]).cwiseProduct((1.0 - cache.o[ti].array()).matrix());
        dz.bottomRows(H) = dg.cwiseProduct((1.0 - cache.g[ti].array().square()).matrix());

        ps.grad(wx).noalias() += dz * cache.x[ti].transpose();
        if (ti > 0)
            ps.grad(wh).noalias() += dz * cache.h[ti - 1].transpose();
        ps.grad(b).col(0).noalias() += dz.rowwise().sum();

        dxs[ti].noalias() = ps.value(wx).transpose() * dz;
        dh_next.noalias() = ps.value(wh).transpose() * dz;
        dc_next = dc.cwiseProduct(cache.f[ti]);
    }
    return dxs;
}

double nll_loss(double eps_x, double eps_y, double sigma_x, double sigma_y) {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
        throw std::invalid_argument("nll_loss: sigma must be positive");
    return 0.5 * (eps_x * eps_x / (sigma_x * sigma_x) + eps_y * eps_y / (sigma_y * sigma_y)) +
           0.5 * std::log(sigma_x * sigma_x * sigma_y * sigma_y);
}

NllBatch gaussian_nll(const Mat& z, const Mat& target) {
    if (z.rows() != 4 || target.rows() != 2 || z.cols() != target.cols())
        throw std::invalid_argument("gaussian_nll: z must be 4 x B and target 2 x B");
    const Eigen::Index B = z.cols();
    NllBatch out;
    out.dz = Mat(4, B);
    double total = 0.0;
    for (Eigen::Index k = 0; k < B; ++k) {
        double ex = z(0, k) - target(0, k);
        double ey = z(1, k) - target(1, k);
        double sx = z(2, k), sy = z(3, k);
        double wx2 = std::exp(-2.0 * sx), wy2 = std::exp(-2.0 * sy);
        total += 0.5 * (ex * ex * wx2 + ey * ey * wy2) + sx + sy;
        out.dz(0, k) = ex * wx2;
        out.dz(1, k) = ey * wy2;
        out.dz(2, k) = 1.0 - ex * ex * wx2;
        out.dz(3, k) = 1.0 - ey * ey * wy2;
    }
    double inv = 1.0 / static_cast<double>(B);
    out.loss = total * inv;
    out.dz *= inv;
    return out;
}

Adam::Adam(const AdamConfig& cfg, std::size_t param_count)
    : cfg_(cfg), m_(param_count, 0.0), v_(param_count, 0.0) {}

void Adam::step(ParameterStore& ps) {
    if (ps.size() != m_.size())
        throw std::invalid_argument("Adam::step: parameter count mismatch");
    ++step_;
    const double lr_t = cfg_.lr / (1.0 + cfg_.decay * static_cast<double>(step_));
    const double b1c = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double b2c = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    double* p = ps.data();
    const double* g = ps.grad_data();
    for (std::size_t k = 0; k < m_.size(); ++k) {
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g[k];
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        double mhat = m_[k] / b1c;
        double vhat = v_[k] / b2c;
        p[k] -= lr_t * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

} // namespace fishsim
