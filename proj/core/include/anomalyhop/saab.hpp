#pragma once

#include <Eigen/Dense>
#include <set>
#include <vector>

#include "anomalyhop/image.hpp"

namespace anomalyhop::saab {

/// One cascade stage: window size, filters kept per parent channel and
/// whether a 2x2 max pool follows before the next stage.
struct HopSpec {
  int window = 3;      // b, square b x b neighborhood
  int keep = 4;        // k, filters retained per parent channel
  bool pool_after = true;
};

/// Per-channel PCA filter bank with adjusted bias.
/// Row 0 of `filters` is the DC filter (all entries 1/sqrt(d)); rows 1..k-1
/// are AC filters, top eigenvectors of the DC-removed, mean-removed patch
/// covariance. `bias` makes every biased training response nonnegative.
struct SaabKernel {
  Eigen::VectorXd patch_mean;  // length d = b*b
  Eigen::MatrixXd filters;     // k x d
  double bias = 0.0;
  Eigen::VectorXd energies;    // k, fraction of input variance per filter
};

/// One output channel of a hop: which kernel and filter row produced it
/// plus its cumulative (root-to-here) energy.
struct ChannelRef {
  int kernel_slot = 0;
  int filter_index = 0;
  double cum_energy = 1.0;
};

/// One hop's kernel bank: a kernel per surviving parent channel and the
/// post-pruning list of output channels.
struct HopBank {
  std::vector<SaabKernel> kernels;  // indexed by parent slot
  std::vector<ChannelRef> outputs;  // kept channels only
};

/// The fitted multi-hop channel-wise Saab transform. Immutable after fit.
struct HopPipeline {
  std::vector<HopSpec> spec;
  std::vector<HopBank> hops;
  int input_channels = 0;
  int input_size = 0;  // training images are square input_size x input_size

  int output_channels(int hop_index) const;  // 1-based hop index
  /// Total stored filter/mean/bias/energy parameter count.
  long parameter_count() const;
};

/// Per-hop feature grid: one feature vector per cell.
struct HopFeatureMap {
  int hop_index = 0;  // 1-based
  int height = 0;
  int width = 0;
  int dim = 0;
  std::vector<double> data;  // row-major (row, col, channel)

  double at(int r, int c, int ch) const {
    return data[(static_cast<size_t>(r) * width + c) * dim + ch];
  }
  double& at(int r, int c, int ch) {
    return data[(static_cast<size_t>(r) * width + c) * dim + ch];
  }
  Eigen::VectorXd vector_at(int r, int c) const;
};

/// Sliding b x b windows of a single-channel plane, enumerated row-major,
/// one flattened patch per matrix row. Output grid is
/// floor((H-b)/stride)+1 by floor((W-b)/stride)+1, no padding.
Eigen::MatrixXd extract_patches(const Eigen::MatrixXd& plane, int b,
                                int stride = 1);

/// Fit one Saab kernel from patch rows. k <= d required; n >= d expected.
SaabKernel fit_saab(const Eigen::MatrixXd& patches, int k);

/// Filter responses of every window: out(i,j,c) = <filter_c, patch - mean> + bias.
/// Returns k planes, one per filter.
std::vector<Eigen::MatrixXd> apply_saab(const Eigen::MatrixXd& plane,
                                        const SaabKernel& kernel, int b,
                                        int stride = 1);

/// Non-overlapping 2x2 max per channel; odd trailing row/column dropped.
Eigen::MatrixXd max_pool_2x2(const Eigen::MatrixXd& plane);
ImageTensor max_pool_2x2(const ImageTensor& fm);

/// Fit the full cascade on equally sized training images. Channels whose
/// cumulative energy falls below energy_threshold are pruned: dropped from
/// the hop output and never expanded.
HopPipeline fit_pipeline(const std::vector<ImageTensor>& train_images,
                         const std::vector<HopSpec>& spec,
                         double energy_threshold = 1e-4);

/// Apply the fitted cascade; returns one HopFeatureMap per requested hop
/// (1-based indices), in ascending hop order.
std::vector<HopFeatureMap> transform(const ImageTensor& img,
                                     const HopPipeline& pipeline,
                                     const std::set<int>& hops_wanted);

/// Expected pre-pool grid side length at each hop for a square input.
std::vector<int> hop_grid_sizes(const std::vector<HopSpec>& spec,
                                int input_size);

}  // namespace anomalyhop::saab
