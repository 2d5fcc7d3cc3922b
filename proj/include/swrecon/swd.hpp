#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace swrecon {

/// How per-slice 1D transport costs are reduced across slices.
/// Squared (the default) averages W2^2 per slice; Rooted averages the
/// square-rooted per-slice cost, which is non-smooth at zero.
enum class SliceReduction { Squared, Rooted };

/// M random directions on the unit sphere in R^d, seed-reproducible.
class ProjectionSet {
  public:
    ProjectionSet(int dim, int count, std::uint64_t seed);

    int dim() const { return static_cast<int>(dirs_.rows()); }
    int count() const { return static_cast<int>(dirs_.cols()); }
    const Eigen::MatrixXd& directions() const { return dirs_; }  // d x M, unit columns

  private:
    Eigen::MatrixXd dirs_;
};

/// Squared 2-Wasserstein distance between two equal-size 1D samples:
/// (1/n) sum_i (a_(i) - b_(i))^2 over sorted order statistics.
double w2sq_1d(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Monte-Carlo sliced squared 2-Wasserstein discrepancy between equal-size
/// empirical samples X, Y (rows are points).
double sliced_w2sq(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const ProjectionSet& proj,
                   SliceReduction reduction = SliceReduction::Squared);

struct SlicedGrad {
    double value = 0.0;
    Eigen::MatrixXd dx;  // n x d, gradient with respect to X rows
};

/// Value and gradient with respect to X. Pairing inside each slice follows
/// the sorted matching; ties break by original index (stable sort), which
/// fixes the subgradient choice.
SlicedGrad sliced_w2sq_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                            const ProjectionSet& proj,
                            SliceReduction reduction = SliceReduction::Squared);

}  // namespace swrecon
