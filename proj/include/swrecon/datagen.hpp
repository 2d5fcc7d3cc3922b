#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "swrecon/dictionary.hpp"
#include "swrecon/timedist.hpp"

namespace swrecon {

/// One benchmark system: truth coefficients over a minimal library that
/// expresses it, published initial state and time length.
struct BenchmarkSpec {
    std::string name;
    LibrarySpec truth_library;
    CoefficientMatrix theta;  // truth, over build_library(truth_library)
    Eigen::VectorXd x0;
    double T = 0.0;

    TimeDistribution default_dist() const { return TimeDistribution::uniform(0.0, T); }
    int dim() const { return truth_library.dim; }
};

/// Unlabeled point set with known initial state, window and time law.
/// true_times, when present, are the hidden ground-truth labels kept for
/// evaluation only; they never inform the fit.
struct ObservationPiece {
    Eigen::MatrixXd points;  // n x d, row order carries no information
    Eigen::VectorXd x_init;
    double t0 = 0.0;
    double T_piece = 0.0;
    TimeDistribution dist = TimeDistribution::uniform(0.0, 1.0);
    std::optional<std::vector<double>> true_times;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

/// Names: linear2d, cubic2d, linear3d, lorenz, lv4d, duffing, pendulum.
BenchmarkSpec make_benchmark(const std::string& name);
std::vector<std::string> benchmark_names();

/// Sample n instants from dist, solve the benchmark through them, and blur
/// with white noise of sigma = noise_ratio * ||X||_rms, where ||X||_rms is
/// the mean Euclidean row norm of the clean points.
ObservationPiece synthesize(const BenchmarkSpec& spec, std::size_t n, const TimeDistribution& dist,
                            double noise_ratio, std::uint64_t seed);

/// Mean Euclidean row norm (1/n) sum_i ||x_i||_2.
double rms_row_norm(const Eigen::MatrixXd& points);

/// Dataset file: one '#'-prefixed JSON metadata line, then CSV x1,...,xd.
/// Hidden labels go to the '<stem>.times.csv' sidecar so the main file is
/// genuinely unlabeled. Round-trips are bit-exact on the points.
void write_dataset(const ObservationPiece& piece, const std::string& path);
ObservationPiece read_dataset(const std::string& path);

std::string times_sidecar_path(const std::string& dataset_path);

}  // namespace swrecon
