#ifndef LAPSIM_DIFFUSION_HPP
#define LAPSIM_DIFFUSION_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lapsim/lap.hpp"
#include "lapsim/model.hpp"

namespace lapsim {

/// The limiting diffusion around the LAP equilibrium.
///
/// The process is computed in I-dimensional class coordinates (centered
/// class counts) and lifted to edge coordinates: the edge-coordinate drift
/// -lift*M is singular off the range of the lift operator, while the class
/// drift A = -M*lift is nonsingular, which keeps the Lyapunov solve clean.
///
/// Sign convention: service completions REMOVE customers, so the drift
/// carries an explicit minus sign (A = -M*lift, drift_edge = -lift*M).
/// Stability means every eigenvalue of A has negative real part; dropping
/// the minus would flip the spectrum and break every check downstream.
struct DiffusionModel {
    Eigen::MatrixXd lift;      // |E| x I, maps centered class counts to
                               // centered occupancies (queues and idleness
                               // in the full pools pinned to zero)
    Eigen::MatrixXd service;   // M: I x |E|, mu_ij on class i's edges
    Eigen::MatrixXd drift;     // A = -M * lift, I x I
    Eigen::MatrixXd drift_edge; // L2 = -lift * M, |E| x |E|
    Eigen::VectorXd noise_diag; // D_ii = lambda_i + sum_j mu_ij psi*_ij (= 2 lambda_i)
    Eigen::MatrixXd sigma_x;   // stationary covariance in class coordinates
    Eigen::MatrixXd sigma_psi; // lift * sigma_x * lift^T
};

struct StabilityReport {
    std::vector<std::complex<double>> eigenvalues;
    double max_real_part = 0.0;
    bool stable = false; // max real part < -1e-9
};

/// Time-averaged moments of an Euler-Maruyama path, over [burn_in, horizon].
struct OuStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd second_moment; // E[x x^T]
    Eigen::VectorXd fourth_moment; // E[x_i^4], per coordinate
    double averaged_time = 0.0;
    std::int64_t steps = 0;

    Eigen::MatrixXd covariance() const { return second_moment - mean * mean.transpose(); }
};

/// Solves the defining constraints of the lift operator column by column:
/// per class the edge deviations sum to the class deviation, per full pool
/// they sum to zero. The tree makes the system square (I+J-1 equations,
/// |E| = I+J-1 unknowns) and nonsingular; throws SingularSystem otherwise.
Eigen::MatrixXd build_lift_operator(const SystemSpec& spec, const PriorityAssignment& pa,
                                    const EquilibriumPoint& eq);

/// Fills service matrix, drift matrices, and noise diagonal of `model`
/// from an already-built lift operator.
DiffusionModel build_drift(const SystemSpec& spec, const PriorityAssignment& pa,
                           const EquilibriumPoint& eq);

StabilityReport check_local_stability(const Eigen::MatrixXd& drift);

/// Solves A S + S A^T + D = 0 by Kronecker vectorization with a dense LU
/// ((A (+) A) vec S = -vec D); fine for the small class counts here.
Eigen::MatrixXd lyapunov_covariance(const Eigen::MatrixXd& drift, const Eigen::MatrixXd& noise);

/// Convenience: build_drift + stability check + stationary covariances.
/// Throws EigenFailure if the drift is not stable.
DiffusionModel build_diffusion_model(const SystemSpec& spec, const PriorityAssignment& pa,
                                     const EquilibriumPoint& eq);

struct OuOptions {
    double horizon = 1e4;
    double burn_in = 0.0;
    double dt = 0.01;
    std::uint64_t seed = 1;
};

/// Euler-Maruyama integration of dX = A X dt + sqrt(D) dB with diagonal D.
/// `sample_every` > 0 additionally records every k-th state into `path`.
OuStats simulate_ou(const Eigen::MatrixXd& drift, const Eigen::VectorXd& noise_diag,
                    const Eigen::VectorXd& x0, const OuOptions& opts,
                    std::vector<Eigen::VectorXd>* path = nullptr, int sample_every = 0);

} // namespace lapsim

#endif
