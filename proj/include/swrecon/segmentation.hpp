#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "swrecon/datagen.hpp"
#include "swrecon/timedist.hpp"

namespace swrecon {

/// Ward-linkage agglomerative clustering (Lance-Williams update,
/// nearest-neighbor chain). Returns labels in 0..n_clusters-1; label ids
/// carry no order. Throws ConfigError when n_clusters > n.
std::vector<int> agglomerative_cluster(const Eigen::MatrixXd& points, int n_clusters);

/// Median nearest-neighbor distance of the cloud (subsampled above 4000
/// points for the estimate).
double median_nn_distance(const Eigen::MatrixXd& points, std::uint64_t seed = 0);

/// Default anchoring radius: 3x the median nearest-neighbor distance,
/// floored so that B_r(x0) contains a point and B_r can bridge the widest
/// sampling gap along the trajectory (fast segments are sparsely sampled
/// under time-uniform draws, so the median alone can be far too small).
double auto_anchor_radius(const Eigen::MatrixXd& points, const Eigen::VectorXd& x0,
                          std::uint64_t seed = 0);

struct PieceWindow {
    double t0 = 0.0;
    double T = 0.0;
    TimeDistribution dist = TimeDistribution::uniform(0.0, 1.0);
};

/// Time windows and truncated laws from cluster populations: boundaries at
/// inv_cdf of cumulative count fractions. counts must sum to the total and
/// be positive. Follows the ordered piece sequence.
std::vector<PieceWindow> split_distribution(const TimeDistribution& dist,
                                            const std::vector<int>& counts, double t0);

struct OrderedClusters {
    std::vector<std::vector<int>> member_rows;  // per ordered piece, original row indices
    std::vector<int> head_rows;                 // head point per ordered piece
};

/// Order clusters along the trajectory and pick head/tail anchor points
/// by ball-overlap counting. Throws SegmentationError when no cluster
/// intersects B_r(x0) (anchoring) or the chain breaks (ordering).
OrderedClusters order_and_anchor(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                 const Eigen::VectorXd& x0, double radius);

struct SegmentationResult {
    std::vector<ObservationPiece> pieces;      // ordered, time-contiguous
    double radius = 0.0;
    std::vector<int> assignments;              // ordered-piece id per input row
    std::vector<std::vector<int>> piece_rows;  // original row indices per piece
};

struct SegmentationOptions {
    int clusters = 10;
    double radius = 0.0;        // 0 -> 3x median nearest-neighbor distance
    int linkage_cap = 10000;    // larger inputs are subsampled for linkage
    std::uint64_t seed = 0;     // used only for subsampling draws
};

/// Full segmentation of one long observation piece into ordered pieces
/// with estimated initial states and truncated observation laws. Hidden
/// true_times, when present, are carried into the pieces for evaluation.
SegmentationResult segment_trajectory(const ObservationPiece& input, const SegmentationOptions& opt);

}  // namespace swrecon
