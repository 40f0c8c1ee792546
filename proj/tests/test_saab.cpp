#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "anomalyhop/errors.hpp"
#include "anomalyhop/saab.hpp"
#include "support.hpp"

using namespace anomalyhop;
using namespace anomalyhop::saab;

namespace {

Eigen::MatrixXd plane_from(const ImageTensor& img, int ch = 0) {
  Eigen::MatrixXd p(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) p(r, c) = img.at(r, c, ch);
  return p;
}

}  // namespace

TEST_CASE("extract_patches window arithmetic") {
  Eigen::MatrixXd plane(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) plane(r, c) = 4 * r + c;

  SUBCASE("4x4, b=3, stride=1 gives 4 patches of 9") {
    Eigen::MatrixXd p = extract_patches(plane, 3, 1);
    CHECK(p.rows() == 4);
    CHECK(p.cols() == 9);
    // First patch is the top-left 3x3 block, row-major.
    Eigen::VectorXd expect(9);
    expect << 0, 1, 2, 4, 5, 6, 8, 9, 10;
    CHECK((p.row(0).transpose() - expect).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("b equal to plane size gives one flattened patch") {
    Eigen::MatrixXd p = extract_patches(plane, 4, 1);
    CHECK(p.rows() == 1);
    for (int i = 0; i < 16; ++i) CHECK(p(0, i) == i);
  }

  SUBCASE("window count formula on a larger plane") {
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(224, 224);
    Eigen::MatrixXd p = extract_patches(big, 5, 1);
    CHECK(p.rows() == 220 * 220);
  }

  SUBCASE("plane smaller than window is rejected") {
    CHECK_THROWS_AS(extract_patches(plane, 5, 1), std::invalid_argument);
  }
}

TEST_CASE("fit_saab on constant patches: zero variance path") {
  Eigen::MatrixXd patches = Eigen::MatrixXd::Constant(20, 4, 3.0);
  SaabKernel k = fit_saab(patches, 3);
  for (int f = 1; f < 3; ++f) CHECK(k.energies[f] == 0.0);
  // DC response before bias is constant*sqrt(d) minus the mean projection;
  // centered patches are zero, so every response is exactly bias.
  auto out = apply_saab(Eigen::MatrixXd::Constant(5, 5, 3.0), k, 2);
  for (const auto& plane : out)
    CHECK(plane.cwiseAbs().maxCoeff() == doctest::Approx(k.bias));
  // Filters still orthonormal after deterministic completion.
  Eigen::MatrixXd g = k.filters * k.filters.transpose();
  CHECK((g - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_saab k=1 keeps only the DC row") {
  Eigen::MatrixXd patches(10, 4);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (long i = 0; i < patches.size(); ++i) patches.data()[i] = u(rng);
  SaabKernel k = fit_saab(patches, 1);
  CHECK(k.filters.rows() == 1);
  for (int i = 0; i < 4; ++i)
    CHECK(k.filters(0, i) == doctest::Approx(0.5));  // 1/sqrt(4)
}

TEST_CASE("AC filters match a brute-force eigendecomposition oracle") {
  // 2x2 patches from a known 2-component linear model.
  std::mt19937 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd dir1(4), dir2(4);
  dir1 << 1, -1, 1, -1;
  dir2 << 1, 1, -1, -1;
  dir1.normalize();
  dir2.normalize();
  Eigen::MatrixXd patches(400, 4);
  for (int i = 0; i < 400; ++i) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 0.5) + 3.0 * g(rng) * dir1 +
                        1.0 * g(rng) * dir2;
    patches.row(i) = p.transpose();
  }

  SaabKernel k = fit_saab(patches, 3);

  // Oracle: explicit covariance of mean- and DC-removed patches plus
  // Jacobi eigendecomposition.
  Eigen::VectorXd dc = Eigen::VectorXd::Constant(4, 0.5);
  Eigen::MatrixXd centered = patches.rowwise() - patches.colwise().mean();
  Eigen::MatrixXd residual = centered - (centered * dc) * dc.transpose();
  Eigen::MatrixXd cov = testsupport::brute_covariance(residual);
  // brute_covariance re-centers; residual columns already have zero mean.
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  testsupport::jacobi_eigen(cov, evals, evecs);

  for (int f = 1; f < 3; ++f) {
    Eigen::VectorXd got = k.filters.row(f).transpose();
    Eigen::VectorXd want = evecs.col(f - 1);
    double diff = std::min((got - want).cwiseAbs().maxCoeff(),
                           (got + want).cwiseAbs().maxCoeff());
    CHECK(diff < 1e-8);
  }
}

TEST_CASE("orthonormality and energy conservation invariants") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd patches(300, 9);
  for (long i = 0; i < patches.size(); ++i) patches.data()[i] = u(rng);

  SaabKernel k = fit_saab(patches, 9);  // k = d, all filters kept

  Eigen::MatrixXd g = k.filters * k.filters.transpose();
  CHECK((g - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() <= 1e-6);

  // Energies non-increasing from row 1 and all nonnegative.
  for (int f = 1; f + 1 < 9; ++f) CHECK(k.energies[f] >= k.energies[f + 1]);
  for (int f = 0; f < 9; ++f) CHECK(k.energies[f] >= 0.0);

  // Energy conservation at k=d: per-patch squared norm after mean removal
  // equals squared norm of the unbiased response vector.
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd p = patches.row(i).transpose() - k.patch_mean;
    Eigen::VectorXd resp = k.filters * p;
    CHECK(resp.squaredNorm() ==
          doctest::Approx(p.squaredNorm()).epsilon(1e-6));
  }
}

TEST_CASE("biased responses nonnegative on training data") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd plane(16, 16);
  for (long i = 0; i < plane.size(); ++i) plane.data()[i] = u(rng);
  SaabKernel k = fit_saab(extract_patches(plane, 3), 5);
  auto out = apply_saab(plane, k, 3);
  for (const auto& ch : out) CHECK(ch.minCoeff() >= 0.0);
}

TEST_CASE("apply_saab matches a hand-computed single patch") {
  Eigen::MatrixXd plane(3, 3);
  plane << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  SaabKernel k;
  k.patch_mean = Eigen::VectorXd::Constant(9, 5.0);
  k.filters = Eigen::MatrixXd::Zero(2, 9);
  k.filters.row(0).setConstant(1.0 / 3.0);
  Eigen::VectorXd ac(9);
  ac << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  ac.normalize();
  k.filters.row(1) = ac.transpose();
  k.bias = 10.0;

  auto out = apply_saab(plane, k, 3);
  REQUIRE(out.size() == 2);
  CHECK(out[0].rows() == 1);
  // DC: sum((p - 5)/3) = 0, plus bias.
  CHECK(out[0](0, 0) == doctest::Approx(10.0));
  // AC: (1-5)/sqrt(2) - (9-5)/sqrt(2) = -8/sqrt(2), plus bias.
  CHECK(out[1](0, 0) == doctest::Approx(10.0 - 8.0 / std::sqrt(2.0)));
}

TEST_CASE("constant planes: AC channels constant and level-independent") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd train(12, 12);
  for (long i = 0; i < train.size(); ++i) train.data()[i] = u(rng);
  SaabKernel k = fit_saab(extract_patches(train, 3), 4);

  // AC filters are orthogonal to the constant direction, so on a constant
  // plane every AC channel is spatially flat and unaffected by the level.
  auto lo = apply_saab(Eigen::MatrixXd::Constant(8, 8, 0.1), k, 3);
  auto hi = apply_saab(Eigen::MatrixXd::Constant(8, 8, 0.9), k, 3);
  for (size_t f = 1; f < lo.size(); ++f) {
    CHECK((lo[f].array() - lo[f](0, 0)).abs().maxCoeff() < 1e-12);
    CHECK((lo[f] - hi[f]).cwiseAbs().maxCoeff() < 1e-9);
  }
  // The DC channel shifts by sqrt(d) * level difference.
  CHECK((hi[0](0, 0) - lo[0](0, 0)) == doctest::Approx(0.8 * 3.0));
}

TEST_CASE("max_pool_2x2") {
  SUBCASE("2x2 of {1,2,3,4} pools to 4") {
    Eigen::MatrixXd p(2, 2);
    p << 1, 2, 3, 4;
    Eigen::MatrixXd out = max_pool_2x2(p);
    CHECK(out.rows() == 1);
    CHECK(out(0, 0) == 4.0);
  }
  SUBCASE("constant plane pools to constant at half dims") {
    Eigen::MatrixXd out = max_pool_2x2(Eigen::MatrixXd::Constant(6, 8, 0.3));
    CHECK(out.rows() == 3);
    CHECK(out.cols() == 4);
    CHECK((out.array() - 0.3).abs().maxCoeff() == 0.0);
  }
  SUBCASE("odd trailing row/col dropped") {
    Eigen::MatrixXd out = max_pool_2x2(Eigen::MatrixXd::Zero(5, 5));
    CHECK(out.rows() == 2);
    CHECK(out.cols() == 2);
  }
}

TEST_CASE("leather-spec grid arithmetic: 220 106 51 24 11") {
  std::vector<HopSpec> spec = {{5, 4, true},
                               {5, 4, true},
                               {3, 4, true},
                               {2, 4, true},
                               {2, 4, false}};
  auto sizes = hop_grid_sizes(spec, 224);
  CHECK(sizes == std::vector<int>{220, 106, 51, 24, 11});
}

TEST_CASE("fit_pipeline channel growth and pruning") {
  std::vector<ImageTensor> train;
  for (int i = 0; i < 4; ++i)
    train.push_back(imageio::synth_texture(imageio::TextureKind::noise, 32, i));
  std::vector<HopSpec> spec = {{3, 3, true}, {2, 2, false}};

  SUBCASE("threshold 0 keeps the full multiplicative tree") {
    HopPipeline p = fit_pipeline(train, spec, 0.0);
    CHECK(p.output_channels(1) == 3);      // 1 input channel * k=3
    CHECK(p.output_channels(2) == 6);      // 3 parents * k=2
  }

  SUBCASE("pruning monotonicity") {
    // Sinusoids concentrate energy in the DC direction, so moderate
    // thresholds prune AC channels without emptying a hop.
    std::vector<ImageTensor> smooth;
    for (int i = 0; i < 4; ++i)
      smooth.push_back(
          imageio::synth_texture(imageio::TextureKind::sinusoid, 32, i));
    int prev = 1 << 20;
    for (double thr : {0.0, 1e-4, 1e-2, 0.05}) {
      HopPipeline p = fit_pipeline(smooth, spec, thr);
      int total = p.output_channels(1) + p.output_channels(2);
      CHECK(total <= prev);
      prev = total;
    }
  }

  SUBCASE("threshold 1 fails loudly") {
    CHECK_THROWS_AS(fit_pipeline(train, spec, 1.0 + 1e-12),
                    ConfigInfeasibleError);
  }

  SUBCASE("window larger than remaining grid is config-infeasible") {
    std::vector<HopSpec> bad = {{31, 3, true}, {5, 2, false}};
    CHECK_THROWS_AS(fit_pipeline(train, bad, 0.0), ConfigInfeasibleError);
  }
}

TEST_CASE("transform determinism and requested hops") {
  std::vector<ImageTensor> train;
  for (int i = 0; i < 5; ++i)
    train.push_back(
        imageio::synth_texture(imageio::TextureKind::sinusoid, 64, i));
  std::vector<HopSpec> spec = {{3, 3, true}, {3, 3, true}, {2, 2, false}};
  HopPipeline p = fit_pipeline(train, spec, 0.0);

  auto a = transform(train[0], p, {1, 2, 3});
  auto b = transform(train[0], p, {1, 2, 3});
  REQUIRE(a.size() == 3);
  for (size_t h = 0; h < 3; ++h) CHECK(a[h].data == b[h].data);

  auto only1 = transform(train[0], p, {1});
  REQUIRE(only1.size() == 1);
  CHECK(only1[0].hop_index == 1);
  CHECK(only1[0].data == a[0].data);

  // Grid sizes match the arithmetic oracle.
  auto sizes = hop_grid_sizes(spec, 64);
  for (size_t h = 0; h < 3; ++h) {
    CHECK(a[h].height == sizes[h]);
    CHECK(a[h].width == sizes[h]);
  }

  CHECK_THROWS_AS(
      transform(imageio::synth_texture(imageio::TextureKind::noise, 32, 0), p,
                {1}),
      std::invalid_argument);
}

TEST_CASE("pipeline responses on training images are nonnegative") {
  std::vector<ImageTensor> train;
  for (int i = 0; i < 4; ++i)
    train.push_back(
        imageio::synth_texture(imageio::TextureKind::sinusoid, 48, 100 + i));
  std::vector<HopSpec> spec = {{3, 4, true}, {2, 3, false}};
  HopPipeline p = fit_pipeline(train, spec, 0.0);
  for (const auto& img : train) {
    auto maps = transform(img, p, {1, 2});
    for (const auto& m : maps)
      for (double v : m.data) CHECK(v >= 0.0);
  }
}
