#include "lapsim/diffusion.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "lapsim/rng.hpp"

namespace lapsim {

Eigen::MatrixXd build_lift_operator(const SystemSpec& spec, const PriorityAssignment& pa,
                                    const EquilibriumPoint& eq) {
    (void)eq; // the equilibrium fixes which pool stays slack, via pa.last_pool
    const int num_cls = spec.num_classes;
    const int num_edges = spec.num_edges();

    // Constraint rows: one per class (edge deviations sum to the class
    // deviation), one per full pool (deviations sum to zero). Square by the
    // tree property: |E| = I + J - 1.
    Eigen::MatrixXd constraints = Eigen::MatrixXd::Zero(num_edges, num_edges);
    for (int e = 0; e < num_edges; ++e) {
        constraints(spec.edges[e].cls, e) = 1.0;
    }
    int row = num_cls;
    for (int j = 0; j < spec.num_pools; ++j) {
        if (j == pa.last_pool) continue;
        for (int e : spec.tree.edges_of_pool[j]) {
            constraints(row, e) = 1.0;
        }
        ++row;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(constraints);
    if (!lu.isInvertible()) {
        throw Error(Errc::SingularSystem, "lift-operator constraints are singular");
    }

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(num_edges, num_cls);
    for (int i = 0; i < num_cls; ++i) rhs(i, i) = 1.0;
    return lu.solve(rhs);
}

DiffusionModel build_drift(const SystemSpec& spec, const PriorityAssignment& pa,
                           const EquilibriumPoint& eq) {
    DiffusionModel model;
    model.lift = build_lift_operator(spec, pa, eq);

    const int num_cls = spec.num_classes;
    const int num_edges = spec.num_edges();
    model.service = Eigen::MatrixXd::Zero(num_cls, num_edges);
    for (int e = 0; e < num_edges; ++e) {
        model.service(spec.edges[e].cls, e) = spec.edges[e].mu;
    }
    model.drift = -model.service * model.lift;
    model.drift_edge = -model.lift * model.service;

    // Arrival noise rate lambda_i plus total completion noise rate, which
    // equals lambda_i at equilibrium; kept in the derived form on purpose.
    model.noise_diag = Eigen::VectorXd::Zero(num_cls);
    for (int i = 0; i < num_cls; ++i) model.noise_diag(i) = spec.arrival_rates[i];
    for (int e = 0; e < num_edges; ++e) {
        model.noise_diag(spec.edges[e].cls) += spec.edges[e].mu * eq.occupancies[e];
    }
    return model;
}

StabilityReport check_local_stability(const Eigen::MatrixXd& drift) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(drift, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::EigenFailure, "eigenvalue iteration did not converge");
    }
    StabilityReport rep;
    rep.max_real_part = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < drift.rows(); ++k) {
        std::complex<double> ev = solver.eigenvalues()(k);
        rep.eigenvalues.push_back(ev);
        rep.max_real_part = std::max(rep.max_real_part, ev.real());
    }
    rep.stable = rep.max_real_part < -1e-9;
    return rep;
}

Eigen::MatrixXd lyapunov_covariance(const Eigen::MatrixXd& drift, const Eigen::MatrixXd& noise) {
    const int n = static_cast<int>(drift.rows());
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

    // vec(A S + S A^T) = (I (x) A + A (x) I) vec(S), column-major stacking.
    Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            kron.block(r * n, c * n, n, n) += eye(r, c) * drift; // I (x) A
            kron.block(r * n, c * n, n, n) += drift(r, c) * eye; // A (x) I
        }
    }
    Eigen::VectorXd vec_noise(n * n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) vec_noise(c * n + r) = noise(r, c);
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kron);
    if (!lu.isInvertible()) {
        throw Error(Errc::SingularLyapunov, "A (+) A is singular");
    }
    Eigen::VectorXd vec_sigma = lu.solve(-vec_noise);

    Eigen::MatrixXd sigma(n, n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) sigma(r, c) = vec_sigma(c * n + r);
    }
    // Symmetrize away roundoff; the exact solution is symmetric.
    return 0.5 * (sigma + sigma.transpose());
}

DiffusionModel build_diffusion_model(const SystemSpec& spec, const PriorityAssignment& pa,
                                     const EquilibriumPoint& eq) {
    DiffusionModel model = build_drift(spec, pa, eq);
    StabilityReport stab = check_local_stability(model.drift);
    if (!stab.stable) {
        throw Error(Errc::EigenFailure, "drift matrix is not stable");
    }
    model.sigma_x = lyapunov_covariance(model.drift, model.noise_diag.asDiagonal());
    model.sigma_psi = model.lift * model.sigma_x * model.lift.transpose();
    return model;
}

OuStats simulate_ou(const Eigen::MatrixXd& drift, const Eigen::VectorXd& noise_diag,
                    const Eigen::VectorXd& x0, const OuOptions& opts,
                    std::vector<Eigen::VectorXd>* path, int sample_every) {
    if (!(opts.dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
    if (opts.burn_in >= opts.horizon) {
        throw Error(Errc::InvalidHorizon, "burn_in must be below horizon");
    }

    const int n = static_cast<int>(drift.rows());
    Eigen::VectorXd noise_scale = noise_diag.cwiseSqrt() * std::sqrt(opts.dt);

    Rng rng(opts.seed);
    Eigen::VectorXd x = x0;
    OuStats stats;
    stats.mean = Eigen::VectorXd::Zero(n);
    stats.second_moment = Eigen::MatrixXd::Zero(n, n);
    stats.fourth_moment = Eigen::VectorXd::Zero(n);

    const std::int64_t total_steps = static_cast<std::int64_t>(opts.horizon / opts.dt);
    const std::int64_t skip_steps = static_cast<std::int64_t>(opts.burn_in / opts.dt);
    Eigen::VectorXd gauss(n);
    for (std::int64_t step = 0; step < total_steps; ++step) {
        for (int k = 0; k < n; ++k) gauss(k) = rng.normal();
        x += drift * x * opts.dt + noise_scale.cwiseProduct(gauss);
        if (step < skip_steps) continue;
        stats.mean += x;
        stats.second_moment += x * x.transpose();
        for (int k = 0; k < n; ++k) stats.fourth_moment(k) += std::pow(x(k), 4);
        ++stats.steps;
        if (path && sample_every > 0 && stats.steps % sample_every == 0) {
            path->push_back(x);
        }
    }
    if (stats.steps > 0) {
        stats.mean /= static_cast<double>(stats.steps);
        stats.second_moment /= static_cast<double>(stats.steps);
        stats.fourth_moment /= static_cast<double>(stats.steps);
    }
    stats.averaged_time = static_cast<double>(stats.steps) * opts.dt;
    return stats;
}

} // namespace lapsim
