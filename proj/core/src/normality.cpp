#include "anomalyhop/normality.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>
#include <string>

#include "anomalyhop/errors.hpp"

namespace anomalyhop::normality {

namespace {

/// Symmetrize, add eps*I and factor. Reports the location on failure.
GaussianParams make_params(const Eigen::VectorXd& mean, Eigen::MatrixXd cov,
                           double epsilon, const std::string& where) {
  const int dim = static_cast<int>(mean.size());
  cov = 0.5 * (cov + cov.transpose()).eval();
  cov.diagonal().array() += epsilon;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov,
                                                       Eigen::EigenvaluesOnly);
    throw NumericError("Cholesky failed at " + where +
                       "; smallest eigenvalue ~= " +
                       std::to_string(eig.eigenvalues().minCoeff()));
  }
  GaussianParams p;
  p.mean = mean;
  p.chol = llt.matrixL();
  p.dim = dim;
  return p;
}

}  // namespace

NormalityModel fit_location_aware(const std::vector<saab::HopFeatureMap>& maps,
                                  double epsilon) {
  const long n = static_cast<long>(maps.size());
  if (n < 2)
    throw InsufficientDataError("fit_location_aware: need at least 2 maps");
  const int h = maps[0].height, w = maps[0].width, dim = maps[0].dim;
  for (const auto& m : maps)
    if (m.height != h || m.width != w || m.dim != dim)
      throw std::invalid_argument("fit_location_aware: map dims differ");
  if (dim > kMaxLocationAwareDim)
    throw ConfigInfeasibleError(
        "fit_location_aware: feature dim " + std::to_string(dim) +
        " exceeds limit " + std::to_string(kMaxLocationAwareDim));

  NormalityModel model;
  model.kind = ModelKind::location_aware;
  model.hop_index = maps[0].hop_index;
  model.epsilon = epsilon;
  model.grid_h = h;
  model.grid_w = w;
  model.params.reserve(static_cast<size_t>(h) * w);

  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
      for (const auto& m : maps) mean += m.vector_at(i, j);
      mean /= static_cast<double>(n);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
      for (const auto& m : maps) {
        Eigen::VectorXd dev = m.vector_at(i, j) - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(dev);
      }
      cov = cov.selfadjointView<Eigen::Lower>();
      cov /= static_cast<double>(n - 1);
      model.params.push_back(make_params(
          mean, cov, epsilon,
          "cell (" + std::to_string(i) + "," + std::to_string(j) + ")"));
    }
  }
  return model;
}

namespace {

NormalityModel fit_pooled(const std::vector<const saab::HopFeatureMap*>& maps,
                          double epsilon, ModelKind kind) {
  const int dim = maps[0]->dim;
  long count = 0;
  for (const auto* m : maps) count += static_cast<long>(m->height) * m->width;
  if (count < 2)
    throw InsufficientDataError("pooled Gaussian fit: need at least 2 vectors");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto* m : maps)
    for (int i = 0; i < m->height; ++i)
      for (int j = 0; j < m->width; ++j) mean += m->vector_at(i, j);
  mean /= static_cast<double>(count);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto* m : maps)
    for (int i = 0; i < m->height; ++i)
      for (int j = 0; j < m->width; ++j) {
        Eigen::VectorXd dev = m->vector_at(i, j) - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(dev);
      }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(count - 1);

  NormalityModel model;
  model.kind = kind;
  model.hop_index = maps[0]->hop_index;
  model.epsilon = epsilon;
  model.params.push_back(make_params(mean, cov, epsilon, "pooled fit"));
  return model;
}

}  // namespace

NormalityModel fit_location_independent(
    const std::vector<saab::HopFeatureMap>& maps, double epsilon) {
  if (maps.empty())
    throw InsufficientDataError("fit_location_independent: no maps");
  const int dim = maps[0].dim;
  for (const auto& m : maps)
    if (m.dim != dim)
      throw std::invalid_argument("fit_location_independent: dims differ");
  std::vector<const saab::HopFeatureMap*> ptrs;
  for (const auto& m : maps) ptrs.push_back(&m);
  return fit_pooled(ptrs, epsilon, ModelKind::location_independent);
}

NormalityModel fit_self_reference(const saab::HopFeatureMap& map,
                                  double epsilon) {
  return fit_pooled({&map}, epsilon, ModelKind::self_reference);
}

double mahalanobis(const Eigen::VectorXd& x, const GaussianParams& params) {
  if (x.size() != params.dim)
    throw std::invalid_argument("mahalanobis: dimension mismatch");
  Eigen::VectorXd y = params.chol.triangularView<Eigen::Lower>().solve(
      x - params.mean);
  return y.norm();
}

AnomalyMap score_map(const saab::HopFeatureMap& map,
                     const NormalityModel& model) {
  if (model.kind == ModelKind::self_reference) {
    NormalityModel fitted = fit_self_reference(map, model.epsilon);
    fitted.hop_index = model.hop_index;
    fitted.kind = ModelKind::location_independent;  // avoid refitting again
    return score_map(map, fitted);
  }
  if (model.kind == ModelKind::location_aware &&
      (map.height != model.grid_h || map.width != model.grid_w))
    throw std::invalid_argument("score_map: map dims differ from model grid");
  if (map.dim != model.params[0].dim)
    throw std::invalid_argument("score_map: feature dim mismatch");

  AnomalyMap out(map.height, map.width, map.hop_index);
  for (int i = 0; i < map.height; ++i) {
    for (int j = 0; j < map.width; ++j) {
      const GaussianParams& p =
          model.kind == ModelKind::location_aware
              ? model.params[static_cast<size_t>(i) * model.grid_w + j]
              : model.params[0];
      out.at(i, j) = mahalanobis(map.vector_at(i, j), p);
    }
  }
  return out;
}

}  // namespace anomalyhop::normality
