#include "swrecon/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/odesolve.hpp"

namespace swrecon {

namespace {

// Project points (rows) onto a labeled curve given as column-states;
// returns the grid time of the closest state, earlier time on ties.
std::vector<double> project_onto_curve(const Eigen::MatrixXd& points,
                                       const std::vector<double>& grid_times,
                                       const Eigen::MatrixXd& curve_cols) {
    std::vector<double> labels(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::max();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < grid_times.size(); ++k) {
            double d2 = (curve_cols.col(static_cast<Eigen::Index>(k)) - points.row(i).transpose()).squaredNorm();
            if (d2 < best) {
                best = d2;
                best_k = k;
            }
        }
        labels[static_cast<std::size_t>(i)] = grid_times[best_k];
    }
    return labels;
}

}  // namespace

std::vector<double> reconstruct_times(const ObservationPiece& piece, const CandidateLibrary& lib,
                                      const CoefficientMatrix& theta, int grid_size) {
    if (grid_size < 2) throw ConfigError("reconstruct_times: grid_size must be >= 2");
    SolveResult sol = dense_solve(lib, theta, piece.x_init, piece.t0, piece.T_piece, grid_size - 1);
    SolveGrid grid = SolveGrid::uniform(piece.t0, piece.T_piece, grid_size - 1);
    Eigen::MatrixXd curve(piece.dim(), grid_size);
    for (int k = 0; k < grid_size; ++k) curve.col(k) = sol.states[static_cast<std::size_t>(k)];
    return project_onto_curve(piece.points, grid.times, curve);
}

std::vector<double> reconstruct_times_net(const ObservationPiece& piece, const MlpSurrogate& net,
                                          int grid_size) {
    if (grid_size < 2) throw ConfigError("reconstruct_times_net: grid_size must be >= 2");
    SolveGrid grid = SolveGrid::uniform(piece.t0, piece.T_piece, grid_size - 1);
    Eigen::VectorXd ts = Eigen::Map<Eigen::VectorXd>(grid.times.data(), grid_size);
    Eigen::MatrixXd curve = net.forward_batch(ts);
    return project_onto_curve(piece.points, grid.times, curve);
}

double rmae_solution(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw ConfigError("rmae_solution: shape mismatch");
    double denom = truth.array().abs().sum();
    if (denom == 0.0) throw NumericError("rmae_solution: truth trajectory sums to zero");
    return (estimate - truth).array().abs().sum() / denom;
}

double e_para(const CoefficientMatrix& theta_hat, const CoefficientMatrix& theta_true) {
    if (theta_hat.rows() != theta_true.rows() || theta_hat.cols() != theta_true.cols())
        throw ConfigError("e_para: shape mismatch (embed both into the same library first)");
    double denom = theta_true.theta.array().abs().sum();
    if (denom == 0.0) throw NumericError("e_para: true coefficients sum to zero");
    return (theta_hat.theta - theta_true.theta).array().abs().sum() / denom;
}

double e_time(const std::vector<double>& t_hat, const std::vector<double>& t_true) {
    if (t_hat.size() != t_true.size()) throw ConfigError("e_time: label counts differ");
    if (t_hat.empty()) throw ConfigError("e_time: empty labels");
    double num = 0.0, denom = 0.0;
    for (std::size_t i = 0; i < t_hat.size(); ++i) {
        num += std::abs(t_hat[i] - t_true[i]);
        denom += std::abs(t_true[i]);
    }
    if (denom == 0.0) throw NumericError("e_time: true labels sum to zero");
    return num / denom;
}

Eigen::MatrixXd assemble_trajectory(const std::vector<ObservationPiece>& pieces,
                                    const CandidateLibrary& lib, const CoefficientMatrix& theta,
                                    const std::vector<double>& eval_times) {
    if (pieces.empty()) throw ConfigError("assemble_trajectory: no pieces");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(eval_times.size()), lib.dim());

    for (std::size_t l = 0; l < pieces.size(); ++l) {
        const auto& piece = pieces[l];
        const double hi = piece.t0 + piece.T_piece;
        std::vector<double> local;
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < eval_times.size(); ++i) {
            double t = eval_times[i];
            bool inside = (t >= piece.t0 && t < hi) || (l + 1 == pieces.size() && t >= piece.t0 && t <= hi + 1e-12);
            if (inside) {
                local.push_back(t);
                rows.push_back(i);
            }
        }
        if (local.empty()) continue;

        std::vector<double> grid_times;
        grid_times.push_back(piece.t0);
        for (double t : local)
            if (t > piece.t0) grid_times.push_back(t);
        SolveGrid grid = SolveGrid::at_times(std::move(grid_times), 1, piece.T_piece / 200.0);
        SolveResult sol = rk4_solve(lib, theta, piece.x_init, grid);
        for (std::size_t i = 0; i < local.size(); ++i) {
            auto it = std::lower_bound(grid.times.begin(), grid.times.end(), local[i]);
            std::size_t pos = (it != grid.times.end() && *it == local[i])
                                  ? static_cast<std::size_t>(it - grid.times.begin())
                                  : 0;
            out.row(static_cast<Eigen::Index>(rows[i])) = sol.states[pos].transpose();
        }
    }
    return out;
}

nlohmann::json ReconstructionReport::to_json() const {
    nlohmann::json j;
    j["metrics"] = {{"rmae_solution", rmae}, {"e_para", e_para}, {"e_time", e_time}};
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["theta_nonzeros"] = {{"dm", dm_theta_nonzeros}, {"pi", pi_theta_nonzeros}};
    nlohmann::json lbl = nlohmann::json::array();
    for (const auto& piece : labels) lbl.push_back(piece);
    j["labels_per_piece"] = lbl;
    j["abs_time_errors"] = abs_time_errors;
    return j;
}

}  // namespace swrecon
