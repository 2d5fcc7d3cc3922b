#pragma once

#include <Eigen/Dense>
#include <vector>

#include "swrecon/dictionary.hpp"

namespace swrecon {

/// Instants to report states at, plus the substep policy between them.
/// Each inter-sample interval is cut into substeps_per_interval equal RK4
/// steps; when max_step > 0 the count is raised so no step exceeds it.
struct SolveGrid {
    std::vector<double> times;  // strictly increasing, times[0] = t0
    int substeps_per_interval = 1;
    double max_step = 0.0;

    static SolveGrid at_times(std::vector<double> times, int substeps = 1, double max_step = 0.0);
    static SolveGrid uniform(double t0, double T, int n_intervals);

    void validate() const;
    int substeps_for(std::size_t interval) const;
};

/// Recording of every RK4 substep (step size + the four stage inputs),
/// sufficient to replay the update exactly and to reverse-accumulate
/// gradients of the discretized trajectory map.
struct SolveTape {
    struct Step {
        double h;
        Eigen::VectorXd a1, a2, a3, a4;  // stage input states
    };
    int dim = 0;
    std::vector<Step> steps;                  // all substeps in forward order
    std::vector<int> substeps_per_interval;   // grouping of steps by grid interval
};

struct SolveResult {
    std::vector<Eigen::VectorXd> states;  // aligned with grid.times; states[0] = x0
    double sup_norm = 0.0;                // max ||x||_2 over every substep
};

inline constexpr double kDefaultBlowUpBound = 1e6;

/// Fixed-step RK4 over the grid. Throws BlowUpError when any state norm
/// exceeds blowup_bound or turns non-finite, identifying the first
/// offending instant. Pass a tape to record gradients.
SolveResult rk4_solve(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                      const Eigen::VectorXd& x0, const SolveGrid& grid,
                      SolveTape* tape = nullptr, double blowup_bound = kDefaultBlowUpBound);

/// Exact gradient of sum_i <loss_grads[i], states[i]> with respect to theta
/// for the RK4-discretized map recorded on the tape (discrete adjoint).
/// loss_grads must align with the solve's grid states.
Eigen::MatrixXd backprop_tape(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                              const SolveTape& tape,
                              const std::vector<Eigen::VectorXd>& loss_grads);

/// Uniform-grid trajectory of n_intervals+1 states over [t0, t0+T].
SolveResult dense_solve(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                        const Eigen::VectorXd& x0, double t0, double T, int n_intervals,
                        double blowup_bound = kDefaultBlowUpBound);

/// Write a trajectory as CSV with header `t,x1,...,xd`.
void write_trajectory_csv(const std::string& path, const std::vector<double>& times,
                          const std::vector<Eigen::VectorXd>& states);

}  // namespace swrecon
