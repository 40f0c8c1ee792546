#pragma once

#include <Eigen/Dense>
#include <vector>

#include "anomalyhop/anomaly_map.hpp"
#include "anomalyhop/saab.hpp"

namespace anomalyhop::normality {

/// Gaussian parameters with the covariance stored as the lower Cholesky
/// factor L of (Sigma + eps*I), so LL^T = Sigma + eps*I.
struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;  // lower triangular
  int dim = 0;
};

enum class ModelKind { location_aware, location_independent, self_reference };

struct NormalityModel {
  ModelKind kind = ModelKind::location_independent;
  int hop_index = 0;
  double epsilon = 0.01;
  int grid_h = 0, grid_w = 0;          // location_aware only
  std::vector<GaussianParams> params;  // grid_h*grid_w cells, or a single entry
};

/// Largest feature dimension accepted for per-cell covariance grids.
inline constexpr int kMaxLocationAwareDim = 256;

/// Per-cell Gaussian over N training feature maps (N >= 2).
NormalityModel fit_location_aware(const std::vector<saab::HopFeatureMap>& maps,
                                  double epsilon);

/// Single Gaussian pooled over all cells of all training maps.
NormalityModel fit_location_independent(
    const std::vector<saab::HopFeatureMap>& maps, double epsilon);

/// Single Gaussian over the cells of one (test) feature map; fitted at
/// inference time.
NormalityModel fit_self_reference(const saab::HopFeatureMap& map,
                                  double epsilon);

/// sqrt((x-mu)^T (Sigma+eps I)^-1 (x-mu)) via triangular solve against the
/// stored Cholesky factor.
double mahalanobis(const Eigen::VectorXd& x, const GaussianParams& params);

/// Per-cell Mahalanobis scores. self_reference models are refitted from
/// `map` itself immediately before scoring.
AnomalyMap score_map(const saab::HopFeatureMap& map,
                     const NormalityModel& model);

}  // namespace anomalyhop::normality
