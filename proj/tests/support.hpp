#pragma once

// Shared fixtures and independent oracle implementations for the test
// suites. Oracles here are deliberately naive (explicit loops, Jacobi
// rotations, Gauss-Jordan) and share no code with the library paths they
// check.

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <vector>

#include "anomalyhop/image.hpp"
#include "anomalyhop/imageio.hpp"

namespace testsupport {

// ---------------------------------------------------------------------------
// Brute-force covariance: explicit double loops, sample divisor n-1.
inline Eigen::MatrixXd brute_covariance(const Eigen::MatrixXd& rows) {
  const long n = rows.rows();
  const long d = rows.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < d; ++j) mean[j] += rows(i, j);
  mean /= static_cast<double>(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (long i = 0; i < n; ++i)
    for (long a = 0; a < d; ++a)
      for (long b = 0; b < d; ++b)
        cov(a, b) += (rows(i, a) - mean[a]) * (rows(i, b) - mean[b]);
  cov /= static_cast<double>(n - 1);
  return cov;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues descending with matching eigenvector columns.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values,
                         Eigen::MatrixXd& vectors) {
  const long n = a.rows();
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;
    for (long p = 0; p < n; ++p) {
      for (long q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (long i = 0; i < n; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (long i = 0; i < n; ++i) {
          double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (long i = 0; i < n; ++i) {
          double vip = vectors(i, p), viq = vectors(i, q);
          vectors(i, p) = c * vip - s * viq;
          vectors(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  values.resize(n);
  for (long i = 0; i < n; ++i) values[i] = a(i, i);
  // Sort descending.
  for (long i = 0; i < n; ++i) {
    long arg = i;
    for (long j = i + 1; j < n; ++j)
      if (values[j] > values[arg]) arg = j;
    if (arg != i) {
      std::swap(values[i], values[arg]);
      vectors.col(i).swap(vectors.col(arg));
    }
  }
}

// ---------------------------------------------------------------------------
// Gauss-Jordan inverse, for the explicit-inverse Mahalanobis oracle.
inline Eigen::MatrixXd gauss_jordan_inverse(Eigen::MatrixXd a) {
  const long n = a.rows();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  for (long col = 0; col < n; ++col) {
    long pivot = col;
    for (long r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    a.row(col).swap(a.row(pivot));
    inv.row(col).swap(inv.row(pivot));
    double p = a(col, col);
    a.row(col) /= p;
    inv.row(col) /= p;
    for (long r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a(r, col);
      a.row(r) -= f * a.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return inv;
}

inline double mahalanobis_oracle(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& mu,
                                 const Eigen::MatrixXd& sigma_plus_eps) {
  Eigen::MatrixXd inv = gauss_jordan_inverse(sigma_plus_eps);
  Eigen::VectorXd d = x - mu;
  return std::sqrt(d.dot(inv * d));
}

// ---------------------------------------------------------------------------
// O(P*N) pairwise AUC with ties counting 1/2.
inline double pairwise_auc(const std::vector<double>& scores,
                           const std::vector<int>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Temporary directory unique to the process, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("anomalyhop_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Write a minimal MVTec-layout tree with synthetic textures: n_train normal
// images, n_defect defective ones (16x16 inverted patch) and one good test
// image. Returns the drawn defect rectangles per test image.
inline std::vector<anomalyhop::imageio::Rect> write_mvtec_fixture(
    const std::filesystem::path& root, const std::string& class_name,
    int n_train, int n_defect, int size,
    anomalyhop::imageio::TextureKind kind =
        anomalyhop::imageio::TextureKind::sinusoid,
    unsigned seed = 1) {
  namespace fs = std::filesystem;
  namespace iio = anomalyhop::imageio;
  fs::create_directories(root / class_name / "train" / "good");
  fs::create_directories(root / class_name / "test" / "good");
  fs::create_directories(root / class_name / "test" / "defect");
  fs::create_directories(root / class_name / "ground_truth" / "defect");

  for (int i = 0; i < n_train; ++i) {
    auto img = iio::synth_texture(kind, size, seed + i);
    char name[16];
    std::snprintf(name, sizeof(name), "%03d.png", i);
    iio::save_png(img, root / class_name / "train" / "good" / name);
  }
  iio::save_png(iio::synth_texture(kind, size, seed + 1000),
                root / class_name / "test" / "good" / "000.png");

  std::mt19937 rng(seed + 77);
  std::uniform_int_distribution<int> pos(4, size - 21);
  std::vector<iio::Rect> rects;
  for (int i = 0; i < n_defect; ++i) {
    auto img = iio::synth_texture(kind, size, seed + 2000 + i);
    iio::Rect rect{pos(rng), pos(rng), 16, 16};
    auto [bad, mask] = iio::inject_anomaly(img, rect, iio::InjectMode::invert);
    char name[16], mname[24];
    std::snprintf(name, sizeof(name), "%03d.png", i);
    std::snprintf(mname, sizeof(mname), "%03d_mask.png", i);
    iio::save_png(bad, root / class_name / "test" / "defect" / name);
    iio::save_png(mask, root / class_name / "ground_truth" / "defect" / mname);
    rects.push_back(rect);
  }
  return rects;
}

}  // namespace testsupport
