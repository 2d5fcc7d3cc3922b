#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "swrecon/datagen.hpp"
#include "swrecon/dictionary.hpp"
#include "swrecon/surrogate.hpp"

namespace swrecon {

/// Reconstruct observation times by projecting each point onto the densely
/// solved trajectory of the identified system over the piece window
/// (grid_size uniform instants; ties resolve to the earlier time).
std::vector<double> reconstruct_times(const ObservationPiece& piece, const CandidateLibrary& lib,
                                      const CoefficientMatrix& theta, int grid_size);

/// Same projection against the learned surrogate instead of the solve.
std::vector<double> reconstruct_times_net(const ObservationPiece& piece, const MlpSurrogate& net,
                                          int grid_size);

/// Entrywise relative L1 error: sum |est - truth| / sum |truth|.
/// Throws NumericError when the truth sums to zero.
double rmae_solution(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// ||theta_hat - theta_true||_1 / ||theta_true||_1 over matching shapes;
/// spurious entries count in the numerator.
double e_para(const CoefficientMatrix& theta_hat, const CoefficientMatrix& theta_true);

/// sum |t_hat - t_true| / sum |t_true|.
double e_time(const std::vector<double>& t_hat, const std::vector<double>& t_true);

/// Evaluate the identified piecewise system on a global uniform grid:
/// each grid instant is solved within the piece window containing it,
/// anchored at that piece's estimated initial state (rows follow
/// eval_times).
Eigen::MatrixXd assemble_trajectory(const std::vector<ObservationPiece>& pieces,
                                    const CandidateLibrary& lib, const CoefficientMatrix& theta,
                                    const std::vector<double>& eval_times);

/// Identified coefficients, reconstructed labels and the summary metrics.
struct ReconstructionReport {
    std::vector<std::vector<double>> labels;  // per ordered piece
    double rmae = -1.0;                       // negative when unavailable
    double e_para = -1.0;
    double e_time = -1.0;
    std::vector<double> abs_time_errors;      // per point, piece order
    std::string config_hash;
    std::uint64_t seed = 0;
    int dm_theta_nonzeros = 0;
    int pi_theta_nonzeros = 0;

    nlohmann::json to_json() const;
};

}  // namespace swrecon
