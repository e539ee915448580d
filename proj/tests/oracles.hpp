#pragma once
// Deliberately naive reference implementations, used only to check the library.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double gauss(const VectorXd& u, const VectorXd& v, double gamma) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) s += (u(k) - v(k)) * (u(k) - v(k));
    return std::exp(-gamma * s);
}

/// Entry (m i + j, m a + b) = k_X(x_i, x_a) k_Theta(theta_{ij}, theta_{ab}); thetas is (t m) x p.
inline MatrixXd loop_gram(const MatrixXd& inputs, const MatrixXd& thetas, Eigen::Index m, double gx, double gt) {
    const Eigen::Index t = inputs.rows();
    MatrixXd k(t * m, t * m);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index a = 0; a < t; ++a)
                for (Eigen::Index b = 0; b < m; ++b)
                    k(m * i + j, m * a + b) = gauss(inputs.row(i), inputs.row(a), gx) *
                                              gauss(thetas.row(m * i + j), thetas.row(m * a + b), gt);
    return k;
}

inline MatrixXd kron_loop(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index r = 0; r < b.rows(); ++r)
                for (Eigen::Index c = 0; c < b.cols(); ++c) out(i * b.rows() + r, j * b.cols() + c) = a(i, j) * b(r, c);
    return out;
}

/// Solves K C A + n lambda C = Y through the vectorized (A (x) K + n lambda I) system.
inline MatrixXd dense_solve(const MatrixXd& k, const MatrixXd& y, const MatrixXd& a, double lambda) {
    const Eigen::Index n = y.rows(), d = y.cols();
    MatrixXd system = kron_loop(a, k);
    system.diagonal().array() += static_cast<double>(n) * lambda;
    VectorXd vec_y(n * d);
    for (Eigen::Index c = 0; c < d; ++c) vec_y.segment(c * n, n) = y.col(c);
    const VectorXd vec_c = system.fullPivLu().solve(vec_y);
    MatrixXd out(n, d);
    for (Eigen::Index c = 0; c < d; ++c) out.col(c) = vec_c.segment(c * n, n);
    return out;
}

/// 1/(2n) ||K C A - Y||^2 + lambda/2 Tr(K C A C^T), summed entry by entry.
inline double loop_objective(const MatrixXd& c, const MatrixXd& k, const MatrixXd& y, const MatrixXd& a, double lambda) {
    const Eigen::Index n = y.rows(), d = y.cols();
    double fit = 0.0, reg = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index q = 0; q < d; ++q) {
            double v = 0.0;
            for (Eigen::Index s = 0; s < n; ++s)
                for (Eigen::Index u = 0; u < d; ++u) v += k(r, s) * c(s, u) * a(u, q);
            fit += (v - y(r, q)) * (v - y(r, q));
        }
    }
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index s = 0; s < n; ++s)
            for (Eigen::Index u = 0; u < d; ++u)
                for (Eigen::Index q = 0; q < d; ++q) reg += k(r, s) * c(s, u) * a(u, q) * c(r, q);
    return fit / (2.0 * static_cast<double>(n)) + 0.5 * lambda * reg;
}

inline MatrixXd central_difference(const std::function<double(const MatrixXd&)>& f, const MatrixXd& x, double h) {
    MatrixXd g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            MatrixXd plus = x, minus = x;
            plus(i, j) += h;
            minus(i, j) -= h;
            g(i, j) = (f(plus) - f(minus)) / (2.0 * h);
        }
    }
    return g;
}

inline MatrixXd random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

/// Symmetric positive definite with eigenvalues in [lo, hi].
inline MatrixXd random_spd(Eigen::Index d, std::mt19937_64& rng, double lo = 0.2, double hi = 2.0) {
    Eigen::HouseholderQR<MatrixXd> qr(random_normal(d, d, rng));
    const MatrixXd q = qr.householderQ();
    std::uniform_real_distribution<double> u(lo, hi);
    VectorXd ev(d);
    for (Eigen::Index k = 0; k < d; ++k) ev(k) = u(rng);
    MatrixXd a = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

inline double rel_err(const MatrixXd& a, const MatrixXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace oracle
