#include "anomalyhop/saab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anomalyhop/errors.hpp"

namespace anomalyhop::saab {

namespace {

int grid_side(int in, int b, int stride) { return (in - b) / stride + 1; }

/// Deterministic completion of the filter matrix: orthogonalize identity
/// basis vectors against the rows already present.
void complete_orthonormal(Eigen::MatrixXd& filters, int from_row) {
  const int d = static_cast<int>(filters.cols());
  int row = from_row;
  for (int seed = 0; seed < d && row < filters.rows(); ++seed) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(d, seed);
    for (int r = 0; r < row; ++r)
      v -= filters.row(r).dot(v) * filters.row(r).transpose();
    double n = v.norm();
    if (n > 1e-8) {
      filters.row(row) = v.transpose() / n;
      ++row;
    }
  }
  if (row < filters.rows())
    throw NumericError("fit_saab: orthonormal completion failed");
}

}  // namespace

Eigen::VectorXd HopFeatureMap::vector_at(int r, int c) const {
  Eigen::VectorXd v(dim);
  for (int ch = 0; ch < dim; ++ch) v[ch] = at(r, c, ch);
  return v;
}

Eigen::MatrixXd extract_patches(const Eigen::MatrixXd& plane, int b,
                                int stride) {
  if (b < 1 || stride < 1)
    throw std::invalid_argument("extract_patches: b and stride must be >= 1");
  if (plane.rows() < b || plane.cols() < b)
    throw std::invalid_argument("extract_patches: plane smaller than window");

  const int gh = grid_side(static_cast<int>(plane.rows()), b, stride);
  const int gw = grid_side(static_cast<int>(plane.cols()), b, stride);
  Eigen::MatrixXd patches(static_cast<long>(gh) * gw, b * b);
  long row = 0;
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j, ++row) {
      int idx = 0;
      for (int di = 0; di < b; ++di)
        for (int dj = 0; dj < b; ++dj, ++idx)
          patches(row, idx) = plane(i * stride + di, j * stride + dj);
    }
  }
  return patches;
}

namespace {

/// Shared core of the two fit paths: eigendecomposition of the DC-removed
/// covariance plus deterministic sign fixing and completion. `centered_cov`
/// is the covariance of mean-removed patches (sample divisor n-1).
SaabKernel fit_from_covariance(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& centered_cov, int k) {
  const int d = static_cast<int>(mean.size());
  if (k < 1 || k > d)
    throw std::invalid_argument("fit_saab: k must be in [1, d]");

  SaabKernel kernel;
  kernel.patch_mean = mean;
  kernel.filters = Eigen::MatrixXd::Zero(k, d);
  kernel.filters.row(0).setConstant(1.0 / std::sqrt(static_cast<double>(d)));
  kernel.energies = Eigen::VectorXd::Zero(k);

  const Eigen::VectorXd dc = kernel.filters.row(0).transpose();
  // residual = centered (I - dc dc^T), so its covariance is P C P.
  Eigen::MatrixXd proj =
      Eigen::MatrixXd::Identity(d, d) - dc * dc.transpose();
  Eigen::MatrixXd cov = proj * centered_cov * proj;
  cov = 0.5 * (cov + cov.transpose());
  double total_var = centered_cov.trace();
  double dc_var = dc.dot(centered_cov * dc);

  if (total_var > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw NumericError("fit_saab: eigendecomposition failed");
    // Eigenvalues ascend; take the top k-1.
    kernel.energies[0] = dc_var / total_var;
    for (int f = 1; f < k; ++f) {
      int src = d - f;
      Eigen::VectorXd v = eig.eigenvectors().col(src);
      double lambda = std::max(eig.eigenvalues()[src], 0.0);
      // Enforce exact orthogonality to DC and earlier rows.
      v -= dc.dot(v) * dc;
      for (int r = 1; r < f; ++r)
        v -= kernel.filters.row(r).dot(v) * kernel.filters.row(r).transpose();
      double norm = v.norm();
      if (norm > 1e-8 && lambda > 0.0) {
        v /= norm;
        // Deterministic sign: largest-magnitude entry positive, ties first.
        int arg = 0;
        for (int i = 1; i < d; ++i)
          if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        if (v[arg] < 0.0) v = -v;
        kernel.filters.row(f) = v.transpose();
        kernel.energies[f] = lambda / total_var;
      } else {
        complete_orthonormal(kernel.filters, f);
        break;  // remaining energies stay 0
      }
    }
  } else {
    // Zero-variance input: DC carries everything, AC completed arbitrarily.
    kernel.energies[0] = 1.0;
    if (k > 1) complete_orthonormal(kernel.filters, 1);
  }
  return kernel;
}

double max_abs_response(const Eigen::MatrixXd& patches,
                        const SaabKernel& kernel) {
  Eigen::MatrixXd centered = patches.rowwise() - kernel.patch_mean.transpose();
  return (centered * kernel.filters.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

SaabKernel fit_saab(const Eigen::MatrixXd& patches, int k) {
  const long n = patches.rows();
  if (n < 1) throw std::invalid_argument("fit_saab: no patches");
  Eigen::VectorXd mean = patches.colwise().mean();
  Eigen::MatrixXd centered = patches.rowwise() - mean.transpose();
  double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  Eigen::MatrixXd cov = centered.transpose() * centered / denom;
  SaabKernel kernel = fit_from_covariance(mean, cov, k);
  kernel.bias = std::ceil(max_abs_response(patches, kernel));
  return kernel;
}

std::vector<Eigen::MatrixXd> apply_saab(const Eigen::MatrixXd& plane,
                                        const SaabKernel& kernel, int b,
                                        int stride) {
  const int d = static_cast<int>(kernel.patch_mean.size());
  if (d != b * b)
    throw std::invalid_argument("apply_saab: kernel fitted with different b");
  if (plane.rows() < b || plane.cols() < b)
    throw std::invalid_argument("apply_saab: plane smaller than window");

  const int k = static_cast<int>(kernel.filters.rows());
  const int gh = grid_side(static_cast<int>(plane.rows()), b, stride);
  const int gw = grid_side(static_cast<int>(plane.cols()), b, stride);
  std::vector<Eigen::MatrixXd> out(k, Eigen::MatrixXd(gh, gw));
  Eigen::VectorXd patch(d);
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j) {
      int idx = 0;
      for (int di = 0; di < b; ++di)
        for (int dj = 0; dj < b; ++dj, ++idx)
          patch[idx] = plane(i * stride + di, j * stride + dj);
      patch -= kernel.patch_mean;
      for (int f = 0; f < k; ++f)
        out[f](i, j) = kernel.filters.row(f).dot(patch) + kernel.bias;
    }
  }
  return out;
}

Eigen::MatrixXd max_pool_2x2(const Eigen::MatrixXd& plane) {
  if (plane.rows() < 2 || plane.cols() < 2)
    throw std::invalid_argument("max_pool_2x2: dims must be >= 2");
  const int oh = static_cast<int>(plane.rows()) / 2;
  const int ow = static_cast<int>(plane.cols()) / 2;
  Eigen::MatrixXd out(oh, ow);
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j)
      out(i, j) = plane.block(2 * i, 2 * j, 2, 2).maxCoeff();
  return out;
}

ImageTensor max_pool_2x2(const ImageTensor& fm) {
  if (fm.height < 2 || fm.width < 2)
    throw std::invalid_argument("max_pool_2x2: dims must be >= 2");
  ImageTensor out(fm.height / 2, fm.width / 2, fm.channels);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      for (int ch = 0; ch < fm.channels; ++ch)
        out.at(r, c, ch) = std::max(
            std::max(fm.at(2 * r, 2 * c, ch), fm.at(2 * r, 2 * c + 1, ch)),
            std::max(fm.at(2 * r + 1, 2 * c, ch),
                     fm.at(2 * r + 1, 2 * c + 1, ch)));
  return out;
}

std::vector<int> hop_grid_sizes(const std::vector<HopSpec>& spec,
                                int input_size) {
  std::vector<int> sizes;
  int side = input_size;
  for (size_t h = 0; h < spec.size(); ++h) {
    if (side < spec[h].window)
      throw ConfigInfeasibleError(
          "hop " + std::to_string(h + 1) + ": window " +
          std::to_string(spec[h].window) + " exceeds grid side " +
          std::to_string(side));
    side = side - spec[h].window + 1;
    sizes.push_back(side);
    if (spec[h].pool_after && h + 1 < spec.size()) side /= 2;
  }
  return sizes;
}

int HopPipeline::output_channels(int hop_index) const {
  return static_cast<int>(hops.at(hop_index - 1).outputs.size());
}

long HopPipeline::parameter_count() const {
  long count = 0;
  for (const auto& bank : hops)
    for (const auto& k : bank.kernels)
      count += k.filters.size() + k.patch_mean.size() + k.energies.size() + 1;
  return count;
}

namespace {

/// Channel planes of one image at the current hop input.
using Planes = std::vector<Eigen::MatrixXd>;

Planes image_planes(const ImageTensor& img) {
  Planes planes(img.channels, Eigen::MatrixXd(img.height, img.width));
  for (int ch = 0; ch < img.channels; ++ch)
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        planes[ch](r, c) = img.at(r, c, ch);
  return planes;
}

}  // namespace

HopPipeline fit_pipeline(const std::vector<ImageTensor>& train_images,
                         const std::vector<HopSpec>& spec,
                         double energy_threshold) {
  if (spec.empty())
    throw std::invalid_argument("fit_pipeline: empty hop spec");
  if (train_images.empty())
    throw std::invalid_argument("fit_pipeline: no training images");
  const int h0 = train_images[0].height, w0 = train_images[0].width;
  const int c0 = train_images[0].channels;
  if (h0 != w0)
    throw std::invalid_argument("fit_pipeline: images must be square");
  for (const auto& img : train_images)
    if (img.height != h0 || img.width != w0 || img.channels != c0)
      throw std::invalid_argument("fit_pipeline: image dims differ");

  HopPipeline pipe;
  pipe.spec = spec;
  pipe.input_channels = c0;
  pipe.input_size = h0;
  hop_grid_sizes(spec, h0);  // validates feasibility up front

  const size_t n_img = train_images.size();
  std::vector<Planes> planes(n_img);
  for (size_t n = 0; n < n_img; ++n) planes[n] = image_planes(train_images[n]);
  std::vector<double> parent_energy(c0, 1.0);

  for (size_t h = 0; h < spec.size(); ++h) {
    const int b = spec[h].window, k = spec[h].keep;
    const int side = static_cast<int>(planes[0][0].rows());
    if (side < b)
      throw ConfigInfeasibleError("hop " + std::to_string(h + 1) +
                                  ": window exceeds grid side " +
                                  std::to_string(side));

    HopBank bank;
    const int n_parents = static_cast<int>(planes[0].size());
    const int g = grid_side(side, b, 1);
    const long n_total = static_cast<long>(n_img) * g * g;
    for (int p = 0; p < n_parents; ++p) {
      if (n_total <= 100000) {
        // Exact two-pass path on the assembled patch matrix.
        Eigen::MatrixXd patches(n_total, b * b);
        for (size_t n = 0; n < n_img; ++n)
          patches.middleRows(static_cast<long>(n) * g * g, g * g) =
              extract_patches(planes[n][p], b, 1);
        bank.kernels.push_back(fit_saab(patches, k));
      } else {
        // One-pass sum / sum-of-outer-products accumulation per image.
        const int d = b * b;
        Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
        Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(d, d);
        for (size_t n = 0; n < n_img; ++n) {
          Eigen::MatrixXd x = extract_patches(planes[n][p], b, 1);
          s += x.colwise().sum().transpose();
          outer.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
        }
        outer = outer.selfadjointView<Eigen::Lower>();
        Eigen::VectorXd mean = s / static_cast<double>(n_total);
        Eigen::MatrixXd cov =
            (outer - static_cast<double>(n_total) * mean * mean.transpose()) /
            static_cast<double>(n_total - 1);
        SaabKernel kern = fit_from_covariance(mean, cov, k);
        double max_abs = 0.0;
        for (size_t n = 0; n < n_img; ++n)
          max_abs = std::max(
              max_abs,
              max_abs_response(extract_patches(planes[n][p], b, 1), kern));
        kern.bias = std::ceil(max_abs);
        bank.kernels.push_back(std::move(kern));
      }
    }

    for (int p = 0; p < n_parents; ++p) {
      for (int f = 0; f < k; ++f) {
        double e = parent_energy[p] * bank.kernels[p].energies[f];
        if (e >= energy_threshold)
          bank.outputs.push_back({p, f, e});
      }
    }
    if (bank.outputs.empty())
      throw ConfigInfeasibleError("hop " + std::to_string(h + 1) +
                                  ": all channels pruned by energy threshold");

    // Propagate kept planes to the next hop.
    std::vector<Planes> next(n_img);
    for (size_t n = 0; n < n_img; ++n) {
      std::vector<std::vector<Eigen::MatrixXd>> resp(n_parents);
      for (int p = 0; p < n_parents; ++p)
        resp[p] = apply_saab(planes[n][p], bank.kernels[p], b, 1);
      for (const auto& out : bank.outputs)
        next[n].push_back(std::move(resp[out.kernel_slot][out.filter_index]));
    }
    parent_energy.clear();
    for (const auto& out : bank.outputs) parent_energy.push_back(out.cum_energy);
    pipe.hops.push_back(std::move(bank));

    if (h + 1 < spec.size()) {
      if (spec[h].pool_after)
        for (size_t n = 0; n < n_img; ++n)
          for (auto& pl : next[n]) pl = max_pool_2x2(pl);
      planes = std::move(next);
    }
  }
  return pipe;
}

std::vector<HopFeatureMap> transform(const ImageTensor& img,
                                     const HopPipeline& pipeline,
                                     const std::set<int>& hops_wanted) {
  if (img.height != pipeline.input_size || img.width != pipeline.input_size ||
      img.channels != pipeline.input_channels)
    throw std::invalid_argument("transform: image dims differ from training");
  for (int h : hops_wanted)
    if (h < 1 || h > static_cast<int>(pipeline.hops.size()))
      throw std::invalid_argument("transform: hop index out of range");

  std::vector<HopFeatureMap> result;
  Planes planes = image_planes(img);
  int last_wanted = hops_wanted.empty() ? 0 : *hops_wanted.rbegin();

  for (size_t h = 0; h < pipeline.hops.size(); ++h) {
    const auto& bank = pipeline.hops[h];
    const int b = pipeline.spec[h].window;
    const int n_parents = static_cast<int>(bank.kernels.size());

    std::vector<std::vector<Eigen::MatrixXd>> resp(n_parents);
    for (int p = 0; p < n_parents; ++p)
      resp[p] = apply_saab(planes[p], bank.kernels[p], b, 1);

    Planes kept;
    kept.reserve(bank.outputs.size());
    for (const auto& out : bank.outputs)
      kept.push_back(std::move(resp[out.kernel_slot][out.filter_index]));

    int hop_index = static_cast<int>(h) + 1;
    if (hops_wanted.count(hop_index)) {
      HopFeatureMap fm;
      fm.hop_index = hop_index;
      fm.height = static_cast<int>(kept[0].rows());
      fm.width = static_cast<int>(kept[0].cols());
      fm.dim = static_cast<int>(kept.size());
      fm.data.resize(static_cast<size_t>(fm.height) * fm.width * fm.dim);
      for (int r = 0; r < fm.height; ++r)
        for (int c = 0; c < fm.width; ++c)
          for (int ch = 0; ch < fm.dim; ++ch)
            fm.at(r, c, ch) = kept[ch](r, c);
      result.push_back(std::move(fm));
    }
    if (hop_index >= last_wanted) break;

    if (pipeline.spec[h].pool_after)
      for (auto& pl : kept) pl = max_pool_2x2(pl);
    planes = std::move(kept);
  }
  return result;
}

}  // namespace anomalyhop::saab
