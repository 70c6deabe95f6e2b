#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "npspec/chebcore.hpp"
#include "npspec/qcmatrix.hpp"

namespace npspec::kde {

using cheb::ChebSeries;
using qc::Matrix;
using qc::Vector;

enum class KernelKind { Gaussian, Legendre };

/// Smoothing kernel and its bandwidth. Legendre kernels have order beta >= 2
/// and support [-1, 1]; the Gaussian has order 2.
struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  int order = 2;
  double bandwidth = 0.1;

  static KernelSpec gaussian(double h) { return {KernelKind::Gaussian, 2, h}; }
  static KernelSpec legendre(int beta, double h) {
    return {KernelKind::Legendre, beta, h};
  }
  KernelSpec with_bandwidth(double h) const { return {kind, order, h}; }

  /// Throws Validation on a non-positive bandwidth or beta < 2.
  void validate() const;
  /// Half-width of the support in kernel units (infinity for Gaussian).
  double support() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

double kernel_eval(const KernelSpec& k, double u);

/// Product-kernel density estimate on [0,1]^dim, dim in {1, 2, 3}.
///
/// Repeated sample tuples are merged into one center carrying a count, so
/// the estimate does not depend on sample order and duplicating every
/// sample leaves it unchanged.
class KDEEstimate {
 public:
  /// samples holds N tuples row-major (N * dim values).
  KDEEstimate(int dim, std::span<const double> samples, KernelSpec kernel);

  int dim() const noexcept { return dim_; }
  /// Number of samples N, counting repeats.
  std::size_t size() const noexcept { return n_; }
  /// Number of distinct centers.
  std::size_t centers() const noexcept { return counts_.size(); }
  double center(std::size_t j, int coord) const {
    return centers_[j * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(coord)];
  }
  /// Coordinate `coord` of every distinct center.
  std::vector<double> center_coords(int coord) const;
  std::span<const double> counts() const noexcept { return counts_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  double bandwidth() const noexcept { return kernel_.bandwidth; }

  /// Same centers with a different kernel.
  KDEEstimate with_kernel(KernelSpec kernel) const;

 private:
  KDEEstimate() = default;

  int dim_ = 1;
  std::size_t n_ = 0;
  std::vector<double> centers_;
  std::vector<double> counts_;
  KernelSpec kernel_;
};

/// (1/(N h^dim)) sum_j prod_c K((point_c - X_jc)/h). Throws OutOfDomain
/// for points outside [0,1]^dim.
double density_at(const KDEEstimate& e, std::span<const double> point);

/// Kernel matrix M(i, j) = K((xs[i] - c_j)/h) / h for centers c_j.
Matrix bump_matrix(const KernelSpec& k, std::span<const double> xs,
                   std::span<const double> centers);

/// Geometric grid of `count` bandwidths over [0.2 c, 5 c], c = N^(-1/(2 beta + dim)).
std::vector<double> default_bandwidth_grid(std::size_t n, int dim, int beta = 2,
                                           std::size_t count = 12);
inline constexpr int kDefaultFolds = 5;
inline constexpr double kDensityFloor = 1e-300;

/// K-fold cross-validation of held-out log-likelihood. Sample i belongs to
/// fold i mod folds; held-out densities are floored at 1e-300 before the
/// log. Ties keep the first grid element.
double select_bandwidth(std::span<const double> samples, int dim,
                        std::span<const double> grid, int folds = kDefaultFolds,
                        const KernelSpec& shape = KernelSpec::gaussian(1.0));

ChebSeries kde1_to_fun(const KDEEstimate& e, double tol = 1e-13);

/// Cross approximation of a dim=2 estimate; rows index coordinate 0,
/// columns coordinate 1.
qc::CMatrix kde2_to_cmatrix(const KDEEstimate& e, double tol = 1e-10,
                            qc::CrossStats* stats = nullptr);

/// a(j, k) = inner(gs[k], bump at center j along `axis`) with the bump
/// (1/h) K((r - X_j,axis)/h) restricted to [0,1]. axis is 1-based. Rows
/// follow the distinct centers of e.
Matrix kde_partial_inner(const KDEEstimate& e, std::span<const ChebSeries> gs,
                         int axis);
/// Single-function form for dim=3 estimates.
Vector kde3_partial_inner(const KDEEstimate& e, const ChebSeries& g, int axis);

}  // namespace npspec::kde
