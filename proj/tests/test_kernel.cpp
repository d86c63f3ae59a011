#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "tvogp/kernel.hpp"

using namespace tvogp;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}
}  // namespace

TEST_CASE("spatial kernel values") {
    const Eigen::VectorXd a = vec({0.2, 0.7});
    CHECK(spatial_kernel(a, a, 0.3) == 1.0);
    CHECK(spatial_kernel(vec({0.2, 0.7}), vec({0.7, 0.2}), 0.3, true) == 1.0);
    CHECK(spatial_kernel(vec({0.0}), vec({1.0}), 1.0) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK_THROWS_AS(spatial_kernel(vec({0.1}), vec({0.1, 0.2}), 0.3), std::invalid_argument);
}

TEST_CASE("time kernel values") {
    CHECK(time_kernel(3, 3, 0.4) == 1.0);
    CHECK(time_kernel(1, 9, 0.0) == 1.0);
    CHECK(time_kernel(5, 7, 0.75) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(time_kernel(1, 2, 1.5), std::invalid_argument);
}

TEST_CASE("product kernel") {
    KernelHyperparams hyp;
    hyp.lengthscale = 1.0;
    hyp.omega = 0.75;
    ArmPoint a{vec({0.0}), 1};
    ArmPoint b{vec({1.0}), 3};
    CHECK(product_kernel(a, a, hyp) == 1.0);
    CHECK(product_kernel(a, b, hyp) == doctest::Approx(0.25 * std::exp(-0.5)).epsilon(1e-9));
    KernelHyperparams uncorrelated = hyp;
    uncorrelated.omega = 1.0;
    CHECK(product_kernel(a, b, uncorrelated) == 0.0);
}

TEST_CASE("kernel bounds and symmetry") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    KernelHyperparams hyp;
    hyp.lengthscale = 0.4;
    hyp.omega = 0.2;
    for (int trial = 0; trial < 100; ++trial) {
        ArmPoint a{vec({unif(rng), unif(rng)}), std::floor(unif(rng) * 10)};
        ArmPoint b{vec({unif(rng), unif(rng)}), std::floor(unif(rng) * 10)};
        const double kab = product_kernel(a, b, hyp);
        CHECK(kab == product_kernel(b, a, hyp));
        CHECK(kab >= 0.0);
        CHECK(kab <= 1.0);
    }
}

TEST_CASE("full product kernel permutation invariance is exact") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    KernelHyperparams hyp;
    hyp.permutation_invariant = true;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd ba(4), bb(4);
        for (int i = 0; i < 4; ++i) {
            ba(i) = unif(rng);
            bb(i) = unif(rng);
        }
        Eigen::VectorXd pa = ba, pb = bb;
        std::shuffle(pa.data(), pa.data() + 4, rng);
        std::shuffle(pb.data(), pb.data() + 4, rng);
        ArmPoint x{ba, 2}, y{bb, 5}, px{pa, 2}, py{pb, 5};
        CHECK(product_kernel(x, y, hyp) == product_kernel(px, py, hyp));
    }
}

TEST_CASE("gram matrix basics") {
    KernelHyperparams hyp;
    CHECK(gram_matrix({ArmPoint{vec({0.3}), 1}}, hyp)(0, 0) == 1.0);
    ArmPoint p{vec({0.3, 0.6}), 4};
    const Eigen::MatrixXd K2 = gram_matrix({p, p}, hyp);
    CHECK(K2.isApprox(Eigen::MatrixXd::Ones(2, 2)));
}

TEST_CASE("gram matrices are PSD (eigenvalue oracle)") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    KernelHyperparams hyp;
    hyp.lengthscale = 0.25;
    hyp.omega = 0.1;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<ArmPoint> pts;
        const int n = 5 + static_cast<int>(unif(rng) * 45);
        for (int i = 0; i < n; ++i) {
            pts.push_back(ArmPoint{vec({unif(rng), unif(rng), unif(rng)}),
                                   std::floor(unif(rng) * 20)});
        }
        const Eigen::MatrixXd K = gram_matrix(pts, hyp);
        CHECK(K.isApprox(K.transpose()));
        for (int i = 0; i < n; ++i) CHECK(K(i, i) == 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    }
}
