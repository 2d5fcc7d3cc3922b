#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "swrecon/datagen.hpp"
#include "swrecon/dictionary.hpp"
#include "swrecon/odesolve.hpp"
#include "swrecon/swd.hpp"

namespace swrecon {

struct PiConfig {
    int iters = 600;
    int iters_1 = 400;        // thresholding onset
    int batch = 128;
    int slices = 20;
    double threshold = 0.04;  // eliminate |theta_j| below this after iters_1
    double lr = 3e-4;
    double weight_decay = 0.0;
    int substep_divisor = 200;  // max RK4 step = T_piece / divisor
    double blowup_bound = 1e6;
    std::uint64_t seed = 0;
    SliceReduction reduction = SliceReduction::Squared;

    void validate() const;
    nlohmann::json to_json() const;
    static PiConfig from_json(const nlohmann::json& j);
};

struct PiLossResult {
    double loss = 0.0;
    Eigen::MatrixXd grad;  // s x d
    int blowups = 0;       // pieces skipped by the divergence guard
};

/// Stochastic forward-solver loss: per piece, solve the candidate system
/// through dist-sampled instants and compare with a uniform point batch
/// under the sliced distance; gradients flow through the RK4 tape. Pieces
/// that blow up are skipped with a zero gradient and counted.
PiLossResult pi_loss_and_grad(const std::vector<ObservationPiece>& pieces,
                              const CandidateLibrary& lib, const CoefficientMatrix& theta,
                              const PiConfig& cfg, std::uint64_t step_seed);

struct PiHistoryRow {
    int iter = 0;
    double loss = 0.0;
    int blowups = 0;
    int nonzeros = 0;
};

struct PiRunResult {
    CoefficientMatrix theta;
    std::vector<PiHistoryRow> history;
    int total_blowups = 0;
};

/// AdamW descent on theta; once past iters_1 every coefficient whose
/// magnitude falls below the threshold is zeroed and stays frozen.
/// Throws NumericError if every coefficient gets eliminated.
PiRunResult run_pi(const std::vector<ObservationPiece>& pieces, const CandidateLibrary& lib,
                   const CoefficientMatrix& theta0, const PiConfig& cfg);

struct LandscapeResult {
    std::vector<double> values_i;  // coefficient values along the first index
    std::vector<double> values_j;
    Eigen::MatrixXd loss;      // res x res; NaN where blown up
    Eigen::MatrixXd sup_norm;  // max trajectory norm (inf where blown up)
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> blowup;
};

/// Scan the loss over a 2-coefficient grid with every sample and slice
/// frozen to one seed, recording blow-ups as data.
LandscapeResult loss_landscape(const std::vector<ObservationPiece>& pieces,
                               const CandidateLibrary& lib, const CoefficientMatrix& theta_base,
                               std::pair<int, int> index_i, std::pair<int, int> index_j,
                               std::pair<double, double> range_i, std::pair<double, double> range_j,
                               int resolution, const PiConfig& cfg);

void write_landscape_csv(const std::string& path, const LandscapeResult& scan);

}  // namespace swrecon
