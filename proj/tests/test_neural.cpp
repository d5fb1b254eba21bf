#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "fishsim/neural.hpp"
#include "fishsim/rng.hpp"

using namespace fishsim;

namespace {

// central-difference check of every parameter against an analytic gradient
void gradcheck(ParameterStore& ps, const std::function<double()>& loss_and_grads) {
    loss_and_grads();
    std::vector<double> analytic(ps.grad_data(), ps.grad_data() + ps.size());
    const double h = 1e-5;
    for (std::size_t k = 0; k < ps.size(); ++k) {
        double saved = ps.data()[k];
        ps.data()[k] = saved + h;
        double up = loss_and_grads();
        ps.data()[k] = saved - h;
        double down = loss_and_grads();
        ps.data()[k] = saved;
        double fd = (up - down) / (2 * h);
        double scale = std::max({1.0, std::fabs(fd), std::fabs(analytic[k])});
        REQUIRE(std::fabs(fd - analytic[k]) / scale < 1e-4);
    }
}

} // namespace

TEST_CASE("activation names round-trip") {
    for (Activation a : {Activation::none, Activation::relu, Activation::tanh_fn})
        CHECK(activation_from_string(activation_to_string(a)) == a);
    CHECK_THROWS_AS(activation_from_string("selu"), std::invalid_argument);
}

TEST_CASE("dense layer computes an affine map") {
    ParameterStore ps;
    DenseLayer d = DenseLayer::make(ps, "d", 2, 2, Activation::none);
    ps.value(d.w).setIdentity();
    ps.value(d.b).setZero();

    Mat x(2, 3);
    x << 1, 2, 3, 4, 5, 6;
    DenseLayer::Cache cache;
    Mat y = d.forward(x, ps, cache);
    CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);

    ps.value(d.b) << -1.0, 1.0;
    Mat z = d.forward(Mat::Zero(2, 1), ps, cache);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 0) == 1.0);
}

TEST_CASE("relu and tanh activations are applied elementwise") {
    ParameterStore ps;
    DenseLayer relu = DenseLayer::make(ps, "r", 1, 1, Activation::relu);
    DenseLayer tanh_l = DenseLayer::make(ps, "t", 1, 1, Activation::tanh_fn);
    ps.value(relu.w) << 1.0;
    ps.value(relu.b) << 0.0;
    ps.value(tanh_l.w) << 1.0;
    ps.value(tanh_l.b) << 0.0;

    DenseLayer::Cache c1, c2;
    Mat x(1, 4);
    x << -2.0, -0.5, 0.0, 3.0;
    Mat yr = relu.forward(x, ps, c1);
    CHECK(yr(0, 0) == 0.0);
    CHECK(yr(0, 1) == 0.0);
    CHECK(yr(0, 2) == 0.0);
    CHECK(yr(0, 3) == 3.0);

    Mat yt = tanh_l.forward(x, ps, c2);
    CHECK(yt(0, 2) == 0.0);
    CHECK(yt(0, 3) == doctest::Approx(std::tanh(3.0)));
}

TEST_CASE("dense init keeps weights in the fan-in box and biases zero") {
    ParameterStore ps;
    DenseLayer d = DenseLayer::make(ps, "d", 64, 16, Activation::relu);
    Rng rng(1, "init");
    d.init(ps, rng);
    double bound = 1.0 / std::sqrt(64.0);
    CHECK(ps.value(d.w).cwiseAbs().maxCoeff() <= bound);
    CHECK(ps.value(d.w).cwiseAbs().maxCoeff() > 0.0);
    CHECK(ps.value(d.b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lstm init sets the forget gate bias to one") {
    ParameterStore ps;
    LstmLayer l = LstmLayer::make(ps, "l", 8, 6, 4, Activation::relu, true);
    Rng rng(2, "init");
    l.init(ps, rng);
    Eigen::Map<Mat> b = ps.value(l.b);
    for (int r = 0; r < 24; ++r) {
        if (r >= 6 && r < 12)
            CHECK(b(r, 0) == 1.0);
        else
            CHECK(b(r, 0) == 0.0);
    }
}

TEST_CASE("zero-weight lstm projects to zero everywhere") {
    ParameterStore ps;
    LstmLayer l = LstmLayer::make(ps, "l", 3, 5, 2, Activation::relu, true);
    // params default to zero; no init call
    std::vector<Mat> xs(4, Mat::Random(3, 2));
    LstmLayer::Cache cache;
    std::vector<Mat> ys = l.forward(xs, ps, cache);
    REQUIRE(ys.size() == 4);
    for (const Mat& y : ys) {
        CHECK(y.rows() == 2);
        CHECK(y.cols() == 2);
        CHECK(y.cwiseAbs().maxCoeff() == 0.0);
    }

    LstmLayer last = LstmLayer::make(ps, "l2", 3, 5, 2, Activation::relu, false);
    LstmLayer::Cache cache2;
    std::vector<Mat> one = last.forward(xs, ps, cache2);
    CHECK(one.size() == 1);
}

TEST_CASE("lstm outputs are causal") {
    ParameterStore ps;
    LstmLayer l = LstmLayer::make(ps, "l", 3, 6, 2, Activation::relu, true);
    Rng rng(7, "causal");
    l.init(ps, rng);

    Rng data(8, "data");
    std::vector<Mat> xs;
    for (int s = 0; s < 4; ++s) {
        Mat x(3, 2);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c)
                x(r, c) = data.normal(0.0, 1.0);
        xs.push_back(x);
    }
    LstmLayer::Cache c1;
    std::vector<Mat> base = l.forward(xs, ps, c1);

    std::vector<Mat> bumped = xs;
    bumped[2].array() += 0.5;
    LstmLayer::Cache c2;
    std::vector<Mat> shifted = l.forward(bumped, ps, c2);

    CHECK((base[0] - shifted[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((base[1] - shifted[1]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((base[2] - shifted[2]).cwiseAbs().maxCoeff() > 0.0);
    CHECK((base[3] - shifted[3]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("nll hand values") {
    CHECK(nll_loss(0.0, 0.0, 1.0, 1.0) == doctest::Approx(0.0));
    CHECK(nll_loss(2.0, 0.0, 1.0, 1.0) == doctest::Approx(2.0));
    double e = std::exp(1.0);
    CHECK(nll_loss(0.0, 0.0, e, e) == doctest::Approx(2.0));
    CHECK_THROWS_AS(nll_loss(0.0, 0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(nll_loss(0.0, 0.0, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("gaussian nll batch gradient matches the hand derivative") {
    Mat z = Mat::Zero(4, 1); // mu = 0, log sigma = 0
    Mat target = Mat::Zero(2, 1);
    NllBatch out = gaussian_nll(z, target);
    CHECK(out.loss == doctest::Approx(0.0));
    CHECK(out.dz(0, 0) == doctest::Approx(0.0)); // d/dmu at zero error
    CHECK(out.dz(1, 0) == doctest::Approx(0.0));
    CHECK(out.dz(2, 0) == doctest::Approx(1.0)); // d/dlogsigma = 1 - eps^2 e^{-2s}
    CHECK(out.dz(3, 0) == doctest::Approx(1.0));

    CHECK_THROWS_AS(gaussian_nll(Mat::Zero(3, 1), target), std::invalid_argument);
}

TEST_CASE("gaussian nll gradient agrees with finite differences") {
    Rng rng(11, "nll-fd");
    Mat z(4, 5), target(2, 5);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c)
            z(r, c) = rng.normal(0.0, 0.7);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c)
            target(r, c) = rng.normal(0.0, 1.5);

    NllBatch out = gaussian_nll(z, target);
    const double h = 1e-6;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 5; ++c) {
            Mat zp = z, zm = z;
            zp(r, c) += h;
            zm(r, c) -= h;
            double fd = (gaussian_nll(zp, target).loss - gaussian_nll(zm, target).loss) / (2 * h);
            CHECK(out.dz(r, c) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("dense layer gradient check") {
    ParameterStore ps;
    DenseLayer d = DenseLayer::make(ps, "d", 3, 2, Activation::tanh_fn);
    Rng rng(21, "fd");
    d.init(ps, rng);

    Mat x(3, 4);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            x(r, c) = rng.normal(0.0, 1.0);

    auto loss = [&]() {
        ps.zero_grads();
        DenseLayer::Cache cache;
        Mat y = d.forward(x, ps, cache);
        d.backward(Mat::Ones(y.rows(), y.cols()), ps, cache);
        return y.sum();
    };
    gradcheck(ps, loss);
}

TEST_CASE("lstm gradient check, all steps projected") {
    ParameterStore ps;
    LstmLayer l = LstmLayer::make(ps, "l", 3, 4, 2, Activation::tanh_fn, true);
    Rng rng(22, "fd");
    l.init(ps, rng);

    std::vector<Mat> xs;
    for (int s = 0; s < 3; ++s) {
        Mat x(3, 2);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c)
                x(r, c) = rng.normal(0.0, 1.0);
        xs.push_back(x);
    }

    auto loss = [&]() {
        ps.zero_grads();
        LstmLayer::Cache cache;
        std::vector<Mat> ys = l.forward(xs, ps, cache);
        std::vector<Mat> dys;
        double total = 0.0;
        for (const Mat& y : ys) {
            total += y.sum();
            dys.push_back(Mat::Ones(y.rows(), y.cols()));
        }
        l.backward(dys, ps, cache);
        return total;
    };
    gradcheck(ps, loss);
}

TEST_CASE("lstm gradient check, last step only") {
    ParameterStore ps;
    LstmLayer l = LstmLayer::make(ps, "l", 2, 3, 2, Activation::relu, false);
    Rng rng(23, "fd");
    l.init(ps, rng);

    std::vector<Mat> xs;
    for (int s = 0; s < 4; ++s) {
        Mat x(2, 3);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c)
                x(r, c) = rng.normal(0.0, 1.0);
        xs.push_back(x);
    }

    auto loss = [&]() {
        ps.zero_grads();
        LstmLayer::Cache cache;
        std::vector<Mat> ys = l.forward(xs, ps, cache);
        l.backward({Mat::Ones(ys[0].rows(), ys[0].cols())}, ps, cache);
        return ys[0].sum();
    };
    gradcheck(ps, loss);
}

TEST_CASE("input gradients flow through both layers") {
    // chain a dense layer into an lstm and check d(loss)/d(input) by fd
    ParameterStore ps;
    DenseLayer d = DenseLayer::make(ps, "d", 2, 3, Activation::tanh_fn);
    LstmLayer l = LstmLayer::make(ps, "l", 3, 4, 2, Activation::tanh_fn, false);
    Rng rng(24, "fd");
    d.init(ps, rng);
    l.init(ps, rng);

    Mat x0(2, 2);
    x0 << 0.3, -0.2, 0.8, 0.1;
    Mat x1(2, 2);
    x1 << -0.5, 0.4, 0.2, -0.9;

    auto run = [&](const Mat& a, const Mat& b, Mat* dx0) {
        ps.zero_grads();
        DenseLayer::Cache c0, c1;
        LstmLayer::Cache cl;
        std::vector<Mat> hs{d.forward(a, ps, c0), d.forward(b, ps, c1)};
        std::vector<Mat> ys = l.forward(hs, ps, cl);
        if (dx0) {
            std::vector<Mat> dhs = l.backward({Mat::Ones(2, 2)}, ps, cl);
            *dx0 = d.backward(dhs[0], ps, c0);
        }
        return ys[0].sum();
    };

    Mat dx0;
    run(x0, x1, &dx0);
    const double h = 1e-5;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            Mat xp = x0, xm = x0;
            xp(r, c) += h;
            xm(r, c) -= h;
            double fd = (run(xp, x1, nullptr) - run(xm, x1, nullptr)) / (2 * h);
            CHECK(dx0(r, c) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("backward without a forward cache is rejected") {
    ParameterStore ps;
    DenseLayer d = DenseLayer::make(ps, "d", 2, 2, Activation::none);
    DenseLayer::Cache cache;
    CHECK_THROWS_AS(d.backward(Mat::Ones(2, 1), ps, cache), std::logic_error);

    LstmLayer l = LstmLayer::make(ps, "l", 2, 2, 2, Activation::relu, true);
    LstmLayer::Cache lc;
    CHECK_THROWS_AS(l.backward({Mat::Ones(2, 1)}, ps, lc), std::logic_error);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
    ParameterStore ps;
    std::size_t blk = ps.add("p", 3, 2);
    ps.value(blk).setConstant(0.7);
    Adam opt({}, ps.size());
    ps.zero_grads();
    opt.step(ps);
    CHECK(ps.value(blk).minCoeff() == 0.7);
    CHECK(ps.value(blk).maxCoeff() == 0.7);
}

TEST_CASE("first adam step moves by about the decayed learning rate") {
    ParameterStore ps;
    std::size_t blk = ps.add("p", 1, 1);
    ps.value(blk)(0, 0) = 0.0;
    AdamConfig cfg; // lr 1e-4, decay 1e-4
    Adam opt(cfg, ps.size());
    ps.grad(blk)(0, 0) = 5.0;
    opt.step(ps);
    CHECK(opt.steps_taken() == 1);
    CHECK(ps.value(blk)(0, 0) == doctest::Approx(-1e-4).epsilon(1e-3));
}

TEST_CASE("adam is deterministic") {
    auto run = [] {
        ParameterStore ps;
        std::size_t blk = ps.add("p", 4, 4);
        ps.value(blk).setZero();
        Adam opt({}, ps.size());
        Rng rng(31, "adam");
        for (int s = 0; s < 50; ++s) {
            for (std::size_t k = 0; k < ps.size(); ++k)
                ps.grad_data()[k] = rng.normal(0.0, 1.0);
            opt.step(ps);
        }
        return Mat(ps.value(blk));
    };
    Mat a = run();
    Mat b = run();
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a gaussian head fits a synthetic distribution") {
    ParameterStore ps;
    DenseLayer head = DenseLayer::make(ps, "head", 1, 4, Activation::none);
    Rng rng(41, "head-fit");
    head.init(ps, rng);

    const int n = 512;
    Mat x = Mat::Ones(1, n);
    Mat target(2, n);
    for (int c = 0; c < n; ++c) {
        target(0, c) = 1.0 + 0.5 * rng.normal(0.0, 1.0);
        target(1, c) = -2.0 + 2.0 * rng.normal(0.0, 1.0);
    }

    AdamConfig cfg;
    cfg.lr = 0.01;
    cfg.decay = 0.0;
    Adam opt(cfg, ps.size());

    double first = 0.0, last = 0.0;
    for (int s = 0; s < 600; ++s) {
        ps.zero_grads();
        DenseLayer::Cache cache;
        Mat z = head.forward(x, ps, cache);
        NllBatch nll = gaussian_nll(z, target);
        head.backward(nll.dz, ps, cache);
        opt.step(ps);
        if (s == 0)
            first = nll.loss;
        last = nll.loss;
    }
    CHECK(last < 0.5 * first);
    CHECK(last < 1.2); // optimum is ln(0.5) + ln(2) + 1 = 1
}
