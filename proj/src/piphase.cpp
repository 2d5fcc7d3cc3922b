#include "swrecon/piphase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/rng.hpp"
#include "swrecon/surrogate.hpp"

namespace swrecon {

void PiConfig::validate() const {
    if (!(iters > 0 && iters_1 > 0 && iters_1 <= iters))
        throw ConfigError("pi config: need 0 < iters_1 <= iters");
    if (batch < 2) throw ConfigError("pi config: batch must be >= 2");
    if (slices < 1) throw ConfigError("pi config: slices must be >= 1");
    if (threshold < 0) throw ConfigError("pi config: threshold must be >= 0");
    if (!(lr > 0)) throw ConfigError("pi config: lr must be positive");
    if (substep_divisor < 1) throw ConfigError("pi config: substep_divisor must be >= 1");
    if (!(blowup_bound > 0)) throw ConfigError("pi config: blowup_bound must be positive");
}

namespace {

struct PieceBatch {
    std::vector<double> sorted_unique;  // solve instants beyond t0
    std::vector<std::size_t> state_index;  // per sample, index into grid states
    Eigen::MatrixXd x_obs;              // B x d
};

// Sample B instants and B observed points; duplicates in the sampled
// instants share a grid state.
PieceBatch make_batch(const ObservationPiece& piece, int b, std::uint64_t seed) {
    PieceBatch pb;
    Rng trng = Rng::child(seed, 0x71);
    std::vector<double> times(static_cast<std::size_t>(b));
    for (auto& t : times) t = piece.dist.inv_cdf(trng.uniform01());

    std::vector<double> uniq = times;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    // keep instants strictly beyond t0; earlier ones map to the anchor state
    std::vector<double> grid;
    for (double t : uniq)
        if (t > piece.t0) grid.push_back(t);

    pb.sorted_unique = grid;
    pb.state_index.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] <= piece.t0) {
            pb.state_index[i] = 0;
        } else {
            auto it = std::lower_bound(grid.begin(), grid.end(), times[i]);
            pb.state_index[i] = 1 + static_cast<std::size_t>(it - grid.begin());
        }
    }

    Rng prng = Rng::child(seed, 0x0b5);
    pb.x_obs.resize(b, piece.dim());
    if (b == piece.size()) {
        pb.x_obs = piece.points;  // full batch: the whole empirical set
    } else {
        for (int i = 0; i < b; ++i)
            pb.x_obs.row(i) = piece.points.row(static_cast<Eigen::Index>(prng.index(static_cast<std::size_t>(piece.size()))));
    }
    return pb;
}

}  // namespace

PiLossResult pi_loss_and_grad(const std::vector<ObservationPiece>& pieces,
                              const CandidateLibrary& lib, const CoefficientMatrix& theta,
                              const PiConfig& cfg, std::uint64_t step_seed) {
    if (pieces.empty()) throw ConfigError("pi_loss: no pieces");
    PiLossResult out;
    out.grad = Eigen::MatrixXd::Zero(lib.size(), lib.dim());

    for (std::size_t l = 0; l < pieces.size(); ++l) {
        const auto& piece = pieces[l];
        std::uint64_t piece_seed = derive_seed(step_seed, 0xB00 + l);
        PieceBatch pb = make_batch(piece, cfg.batch, piece_seed);

        std::vector<double> grid_times;
        grid_times.reserve(pb.sorted_unique.size() + 1);
        grid_times.push_back(piece.t0);
        grid_times.insert(grid_times.end(), pb.sorted_unique.begin(), pb.sorted_unique.end());
        SolveGrid grid = SolveGrid::at_times(std::move(grid_times), 1,
                                             piece.T_piece / cfg.substep_divisor);

        SolveTape tape;
        SolveResult sol;
        try {
            sol = rk4_solve(lib, theta, piece.x_init, grid, &tape, cfg.blowup_bound);
        } catch (const BlowUpError&) {
            ++out.blowups;  // skip-and-flag: zero gradient lets descent recover
            continue;
        }

        Eigen::MatrixXd x_sim(cfg.batch, lib.dim());
        for (int i = 0; i < cfg.batch; ++i)
            x_sim.row(i) = sol.states[pb.state_index[static_cast<std::size_t>(i)]].transpose();

        ProjectionSet proj(static_cast<int>(lib.dim()), cfg.slices, derive_seed(piece_seed, 0x50F7));
        SlicedGrad sg = sliced_w2sq_grad(x_sim, pb.x_obs, proj, cfg.reduction);
        out.loss += sg.value;

        std::vector<Eigen::VectorXd> state_grads(sol.states.size(),
                                                 Eigen::VectorXd::Zero(lib.dim()));
        for (int i = 0; i < cfg.batch; ++i)
            state_grads[pb.state_index[static_cast<std::size_t>(i)]] += sg.dx.row(i).transpose();
        out.grad += backprop_tape(lib, theta, tape, state_grads);
    }
    if (!std::isfinite(out.loss)) throw NumericError("pi_loss: non-finite loss");
    return out;
}

PiRunResult run_pi(const std::vector<ObservationPiece>& pieces, const CandidateLibrary& lib,
                   const CoefficientMatrix& theta0, const PiConfig& cfg) {
    cfg.validate();
    if (theta0.rows() != lib.size() || theta0.cols() != lib.dim())
        throw ConfigError("run_pi: theta0 shape does not match library");

    PiRunResult out;
    out.theta = theta0;
    Eigen::MatrixXd active = Eigen::MatrixXd::Ones(lib.size(), lib.dim());

    AdamWConfig opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    AdamWMatrixState state;

    for (int it = 1; it <= cfg.iters; ++it) {
        std::uint64_t step_seed = derive_seed(cfg.seed, 0x9A, static_cast<std::uint64_t>(it));
        PiLossResult r = pi_loss_and_grad(pieces, lib, out.theta, cfg, step_seed);
        out.total_blowups += r.blowups;

        Eigen::MatrixXd g = r.grad.cwiseProduct(active);
        adamw_update(out.theta.theta, state, g, opt);
        out.theta.theta = out.theta.theta.cwiseProduct(active);

        if (it > cfg.iters_1) {
            for (Eigen::Index j = 0; j < out.theta.rows(); ++j)
                for (Eigen::Index k = 0; k < out.theta.cols(); ++k)
                    if (active(j, k) != 0.0 && std::abs(out.theta.theta(j, k)) < cfg.threshold) {
                        out.theta.theta(j, k) = 0.0;
                        active(j, k) = 0.0;  // frozen for all later iterations
                    }
            if (active.sum() == 0.0)
                throw NumericError("run_pi: thresholding eliminated every coefficient");
        }

        PiHistoryRow row;
        row.iter = it;
        row.loss = r.loss;
        row.blowups = r.blowups;
        row.nonzeros = static_cast<int>((out.theta.theta.array() != 0.0).count());
        out.history.push_back(row);
    }
    return out;
}

LandscapeResult loss_landscape(const std::vector<ObservationPiece>& pieces,
                               const CandidateLibrary& lib, const CoefficientMatrix& theta_base,
                               std::pair<int, int> index_i, std::pair<int, int> index_j,
                               std::pair<double, double> range_i, std::pair<double, double> range_j,
                               int resolution, const PiConfig& cfg) {
    if (resolution < 2) throw ConfigError("loss_landscape: resolution must be >= 2");
    LandscapeResult res;
    res.loss.resize(resolution, resolution);
    res.sup_norm.resize(resolution, resolution);
    res.blowup.resize(resolution, resolution);
    res.values_i.resize(static_cast<std::size_t>(resolution));
    res.values_j.resize(static_cast<std::size_t>(resolution));
    for (int a = 0; a < resolution; ++a) {
        double f = static_cast<double>(a) / (resolution - 1);
        res.values_i[static_cast<std::size_t>(a)] = range_i.first + f * (range_i.second - range_i.first);
        res.values_j[static_cast<std::size_t>(a)] = range_j.first + f * (range_j.second - range_j.first);
    }

    // One frozen batch per piece: identical instants, points and slices for
    // every grid cell, so cells are directly comparable.
    std::vector<PieceBatch> batches;
    std::vector<SolveGrid> grids;
    for (std::size_t l = 0; l < pieces.size(); ++l) {
        PieceBatch pb = make_batch(pieces[l], cfg.batch, derive_seed(cfg.seed, 0x1a5d, l));
        std::vector<double> gt;
        gt.push_back(pieces[l].t0);
        gt.insert(gt.end(), pb.sorted_unique.begin(), pb.sorted_unique.end());
        grids.push_back(SolveGrid::at_times(std::move(gt), 1,
                                            pieces[l].T_piece / cfg.substep_divisor));
        batches.push_back(std::move(pb));
    }
    ProjectionSet proj(static_cast<int>(lib.dim()), cfg.slices, derive_seed(cfg.seed, 0x51));

    CoefficientMatrix theta = theta_base;
    for (int a = 0; a < resolution; ++a) {
        for (int b = 0; b < resolution; ++b) {
            theta.theta = theta_base.theta;
            theta.theta(index_i.first, index_i.second) = res.values_i[static_cast<std::size_t>(a)];
            theta.theta(index_j.first, index_j.second) = res.values_j[static_cast<std::size_t>(b)];
            double loss = 0.0, sup = 0.0;
            bool blew = false;
            for (std::size_t l = 0; l < pieces.size(); ++l) {
                try {
                    SolveResult sol = rk4_solve(lib, theta, pieces[l].x_init, grids[l], nullptr,
                                                cfg.blowup_bound);
                    sup = std::max(sup, sol.sup_norm);
                    Eigen::MatrixXd x_sim(cfg.batch, lib.dim());
                    for (int i = 0; i < cfg.batch; ++i)
                        x_sim.row(i) =
                            sol.states[batches[l].state_index[static_cast<std::size_t>(i)]].transpose();
                    loss += sliced_w2sq(x_sim, batches[l].x_obs, proj, cfg.reduction);
                } catch (const BlowUpError&) {
                    blew = true;
                    break;
                }
            }
            res.blowup(a, b) = blew ? 1 : 0;
            res.loss(a, b) = blew ? std::numeric_limits<double>::quiet_NaN() : loss;
            res.sup_norm(a, b) = blew ? std::numeric_limits<double>::infinity() : sup;
        }
    }
    return res;
}

void write_landscape_csv(const std::string& path, const LandscapeResult& scan) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "i,j,value_i,value_j,loss,blowup,sup_norm\n" << std::setprecision(17);
    for (Eigen::Index a = 0; a < scan.loss.rows(); ++a)
        for (Eigen::Index b = 0; b < scan.loss.cols(); ++b)
            out << a << "," << b << "," << scan.values_i[static_cast<std::size_t>(a)] << ","
                << scan.values_j[static_cast<std::size_t>(b)] << "," << scan.loss(a, b) << ","
                << scan.blowup(a, b) << "," << scan.sup_norm(a, b) << "\n";
}

nlohmann::json PiConfig::to_json() const {
    return {{"iters", iters},
            {"iters_1", iters_1},
            {"batch", batch},
            {"slices", slices},
            {"threshold", threshold},
            {"lr", lr},
            {"weight_decay", weight_decay},
            {"substep_divisor", substep_divisor},
            {"blowup_bound", blowup_bound},
            {"seed", seed},
            {"rooted_slices", reduction == SliceReduction::Rooted}};
}

PiConfig PiConfig::from_json(const nlohmann::json& j) {
    PiConfig c;
    c.iters = j.value("iters", c.iters);
    c.iters_1 = j.value("iters_1", c.iters_1);
    c.batch = j.value("batch", c.batch);
    c.slices = j.value("slices", c.slices);
    c.threshold = j.value("threshold", c.threshold);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.substep_divisor = j.value("substep_divisor", c.substep_divisor);
    c.blowup_bound = j.value("blowup_bound", c.blowup_bound);
    c.seed = j.value("seed", c.seed);
    c.reduction = j.value("rooted_slices", false) ? SliceReduction::Rooted : SliceReduction::Squared;
    c.validate();
    return c;
}

}  // namespace swrecon
