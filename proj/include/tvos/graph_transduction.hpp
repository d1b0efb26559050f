#pragma once

#include <Eigen/Dense>

namespace tvos {

/// Dense n x c label matrix. Observed rows are one-hot; unobserved rows are
/// all-zero (that convention is what makes the anchored iteration well posed).
using LabelMatrix = Eigen::MatrixXd;

/// Symmetric non-negative pairwise similarity with a zero diagonal.
struct AffinityMatrix {
    Eigen::MatrixXd w;

    int n() const { return static_cast<int>(w.rows()); }

    /// Validates non-negativity and squareness; zeroes the diagonal
    /// (self-affinity is excluded by convention).
    static AffinityMatrix from_dense(Eigen::MatrixXd m);

    /// Row sums d_i.
    Eigen::VectorXd degrees() const { return w.rowwise().sum(); }
};

struct TransductionParams {
    double alpha = 0.99;       // smoothing weight in [0, 1)
    double mu = 99.0;          // anchor weight, alpha = mu / (mu + 1)
    double tol = 1e-10;        // max-abs update threshold
    int max_iters = 10000;

    static TransductionParams from_alpha(double alpha, double tol = 1e-10, int max_iters = 10000);
    static TransductionParams from_mu(double mu, double tol = 1e-10, int max_iters = 10000);
    void validate() const;     // throws on out-of-range values or an inconsistent (alpha, mu) pair
};

struct SolveResult {
    LabelMatrix y;
    int iterations = 0;
    bool converged = false;
};

/// S = D^{-1/2} W D^{-1/2}; rows/cols of isolated nodes (d_i = 0) are zero.
Eigen::MatrixXd normalize_affinity(const AffinityMatrix& w);

/// Smoothness-plus-anchor objective:
///   sum over all ordered pairs (i,j) of w_ij * ||y_i/sqrt(d_i) - y_j/sqrt(d_j)||^2
///   + mu * sum over observed rows of ||y_i - y0_i||^2.
/// A row of y0 counts as observed when it is not all-zero. Isolated nodes
/// contribute nothing to the smoothness term.
double energy(const AffinityMatrix& w, const LabelMatrix& y_hat, const LabelMatrix& y0, double mu);

/// One diffusion step: alpha * S * y_k + (1 - alpha) * y0.
LabelMatrix propagate_step(const Eigen::MatrixXd& s, const LabelMatrix& y_k,
                           const LabelMatrix& y0, double alpha);

/// Iterates propagate_step from y0 until the max-abs update drops below
/// p.tol or p.max_iters is reached (converged flag reports which).
SolveResult solve_iterative(const AffinityMatrix& w, const LabelMatrix& y0,
                            const TransductionParams& p);

/// Fixed point of the iteration: (1 - alpha) * (I - alpha S)^{-1} * y0.
LabelMatrix solve_closed_form(const AffinityMatrix& w, const LabelMatrix& y0, double alpha);

/// Anchor weight that makes the iteration's fixed point the exact minimizer of
/// `energy` over fully observed y0: with the ordered-pair smoothness sum above,
/// stationarity of  energy  at the fixed point requires mu = 2 (1 - alpha) / alpha.
double energy_consistent_mu(double alpha);

}  // namespace tvos
