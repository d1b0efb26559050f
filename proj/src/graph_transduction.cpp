#include "tvos/graph_transduction.hpp"

#include <cmath>
#include <stdexcept>

namespace tvos {

AffinityMatrix AffinityMatrix::from_dense(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("AffinityMatrix: matrix must be square");
    if ((m.array() < 0.0).any()) throw std::invalid_argument("AffinityMatrix: negative affinity entry");
    m.diagonal().setZero();
    return AffinityMatrix{std::move(m)};
}

TransductionParams TransductionParams::from_alpha(double alpha, double tol, int max_iters) {
    TransductionParams p;
    p.alpha = alpha;
    p.mu = alpha / (1.0 - alpha);
    p.tol = tol;
    p.max_iters = max_iters;
    p.validate();
    return p;
}

TransductionParams TransductionParams::from_mu(double mu, double tol, int max_iters) {
    TransductionParams p;
    p.mu = mu;
    p.alpha = mu / (mu + 1.0);
    p.tol = tol;
    p.max_iters = max_iters;
    p.validate();
    return p;
}

void TransductionParams::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("TransductionParams: alpha must be in [0,1)");
    if (!(mu >= 0.0)) throw std::invalid_argument("TransductionParams: mu must be non-negative");
    if (!(tol > 0.0)) throw std::invalid_argument("TransductionParams: tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("TransductionParams: max_iters must be >= 1");
    if (std::abs(alpha - mu / (mu + 1.0)) > 1e-12)
        throw std::invalid_argument("TransductionParams: alpha and mu are inconsistent");
}

Eigen::MatrixXd normalize_affinity(const AffinityMatrix& w) {
    const Eigen::VectorXd d = w.degrees();
    Eigen::VectorXd inv_sqrt(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
        inv_sqrt[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
    return inv_sqrt.asDiagonal() * w.w * inv_sqrt.asDiagonal();
}

double energy(const AffinityMatrix& w, const LabelMatrix& y_hat, const LabelMatrix& y0, double mu) {
    const int n = w.n();
    if (y_hat.rows() != n || y0.rows() != n || y_hat.cols() != y0.cols())
        throw std::invalid_argument("energy: dimension mismatch");
    if (mu < 0.0) throw std::invalid_argument("energy: mu must be non-negative");

    const Eigen::VectorXd d = w.degrees();
    Eigen::VectorXd inv_sqrt(n);
    for (int i = 0; i < n; ++i) inv_sqrt[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;

    double smooth = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double wij = w.w(i, j);
            if (wij == 0.0) continue;  // also skips every pair touching an isolated node
            smooth += wij * (y_hat.row(i) * inv_sqrt[i] - y_hat.row(j) * inv_sqrt[j]).squaredNorm();
        }
    }

    double fit = 0.0;
    for (int i = 0; i < n; ++i) {
        if (y0.row(i).isZero(0.0)) continue;  // all-zero rows are unobserved
        fit += (y_hat.row(i) - y0.row(i)).squaredNorm();
    }
    return smooth + mu * fit;
}

LabelMatrix propagate_step(const Eigen::MatrixXd& s, const LabelMatrix& y_k,
                           const LabelMatrix& y0, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("propagate_step: alpha must be in [0,1)");
    if (s.cols() != y_k.rows() || y_k.rows() != y0.rows() || y_k.cols() != y0.cols())
        throw std::invalid_argument("propagate_step: dimension mismatch");
    return alpha * (s * y_k) + (1.0 - alpha) * y0;
}

SolveResult solve_iterative(const AffinityMatrix& w, const LabelMatrix& y0,
                            const TransductionParams& p) {
    p.validate();
    if (y0.rows() != w.n()) throw std::invalid_argument("solve_iterative: label row count mismatch");

    const Eigen::MatrixXd s = normalize_affinity(w);
    SolveResult res;
    res.y = y0;
    for (int k = 1; k <= p.max_iters; ++k) {
        LabelMatrix next = propagate_step(s, res.y, y0, p.alpha);
        const double delta = (next - res.y).cwiseAbs().maxCoeff();
        res.y = std::move(next);
        res.iterations = k;
        if (delta < p.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

LabelMatrix solve_closed_form(const AffinityMatrix& w, const LabelMatrix& y0, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("solve_closed_form: alpha must be in [0,1)");
    if (y0.rows() != w.n()) throw std::invalid_argument("solve_closed_form: label row count mismatch");

    const int n = w.n();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * normalize_affinity(w);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw std::runtime_error("solve_closed_form: singular system (alpha too close to 1?)");
    return (1.0 - alpha) * lu.solve(y0);
}

double energy_consistent_mu(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("energy_consistent_mu: alpha must be in (0,1)");
    return 2.0 * (1.0 - alpha) / alpha;
}

}  // namespace tvos
