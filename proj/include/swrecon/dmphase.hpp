#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "swrecon/datagen.hpp"
#include "swrecon/dictionary.hpp"
#include "swrecon/surrogate.hpp"
#include "swrecon/swd.hpp"

namespace swrecon {

struct DmConfig {
    int iters = 3000;
    int iters_phase1 = 600;   // warmup without the residual term
    int iters_update = 100;   // STRidge cadence after warmup
    int batch = 256;
    int slices = 20;
    double lambda_init = 0.5;
    double lambda_reg = 1e-3;
    double lambda_sparse = 1e-5;  // STRidge ridge weight
    double threshold = 0.04;      // STRidge hard threshold
    int n_reg = 50;               // residual/stacking grid points per piece
    double lr = 3e-4;
    double weight_decay = 0.0;
    int hidden_layers = 4;
    int width = 64;
    std::uint64_t seed = 0;
    SliceReduction reduction = SliceReduction::Squared;

    void validate() const;
    nlohmann::json to_json() const;
    static DmConfig from_json(const nlohmann::json& j);
};

struct DmLossParts {
    double swd = 0.0, init = 0.0, reg = 0.0;
    double total() const { return swd + init + reg; }
};

struct DmLossResult {
    DmLossParts parts;
    MlpGradients grads;
};

/// One stochastic evaluation of the surrogate training objective for a
/// piece: sliced SWD between net(t) at dist-sampled instants and a uniform
/// point batch, plus the initial-condition penalty, plus (when enabled)
/// the dictionary-residual regularizer on a uniform time grid.
DmLossResult dm_loss(const ObservationPiece& piece, const MlpSurrogate& net,
                     const CandidateLibrary& lib, const CoefficientMatrix& theta,
                     const DmConfig& cfg, std::uint64_t step_seed, bool include_reg);

/// Sequential thresholded ridge regression for A x ~ b. Iteratively ridge
/// solves, zeroes entries with |x_j| <= eta, and refits on the surviving
/// support; the final refit is plain least squares. Throws NumericError on
/// a rank-deficient unregularized solve.
Eigen::VectorXd stridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda,
                        double eta);

struct DmHistoryRow {
    int iter = 0;
    double swd = 0.0, init = 0.0, reg = 0.0;
    bool theta_updated = false;
};

struct DmRunResult {
    std::vector<MlpSurrogate> nets;  // one per piece, training order
    CoefficientMatrix theta;
    std::vector<DmHistoryRow> history;
};

/// Alternating-direction training: round-robin surrogate updates against
/// the sliced loss, with periodic STRidge refreshes of theta from the
/// stacked per-piece grids (values and time derivatives).
DmRunResult run_dm(const std::vector<ObservationPiece>& pieces, const CandidateLibrary& lib,
                   const DmConfig& cfg);

/// Stack phi(x_psi) rows and time-derivative targets over every piece's
/// uniform grid; used by the STRidge refresh and exposed for tests.
void stack_regression_system(const std::vector<ObservationPiece>& pieces,
                             const std::vector<MlpSurrogate>& nets, const CandidateLibrary& lib,
                             int n_grid, Eigen::MatrixXd& phi_out, Eigen::MatrixXd& dx_out);

}  // namespace swrecon
