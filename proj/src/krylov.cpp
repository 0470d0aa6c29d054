#include "clab/krylov.hpp"

#include <cmath>
#include <vector>

namespace clab {

GmresResult gmres(const LinearOp& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x0, double tol,
                  int max_iter, int restart) {
    GmresResult out;
    out.x = x0;
    const double bn = b.norm();
    if (bn == 0) {
        out.x.setZero();
        out.converged = true;
        return out;
    }
    const Eigen::Index n = b.size();
    Eigen::VectorXd r(n), w(n);
    auto true_residual = [&] {
        A(out.x, w);
        r = b - w;
        return r.norm() / bn;
    };

    double rel = true_residual();
    while (out.iterations < max_iter && rel > tol) {
        const int m = std::min(restart, max_iter - out.iterations);
        Eigen::MatrixXd V(n, m + 1), H = Eigen::MatrixXd::Zero(m + 1, m);
        std::vector<double> cs(m), sn(m);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
        double beta = r.norm();
        V.col(0) = r / beta;
        g(0) = beta;
        int k = 0;
        for (; k < m; ++k) {
            A(V.col(k), w);
            ++out.iterations;
            for (int i = 0; i <= k; ++i) {
                H(i, k) = V.col(i).dot(w);
                w -= H(i, k) * V.col(i);
            }
            // one reorthogonalization pass keeps long cycles honest
            for (int i = 0; i <= k; ++i) {
                double c = V.col(i).dot(w);
                H(i, k) += c;
                w -= c * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) > 0) V.col(k + 1) = w / H(k + 1, k);
            for (int i = 0; i < k; ++i) {
                double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            double den = std::hypot(H(k, k), H(k + 1, k));
            cs[k] = den == 0 ? 1 : H(k, k) / den;
            sn[k] = den == 0 ? 0 : H(k + 1, k) / den;
            H(k, k) = den;
            H(k + 1, k) = 0;
            g(k + 1) = -sn[k] * g(k);
            g(k) = cs[k] * g(k);
            if (std::abs(g(k + 1)) / bn <= tol || H(k, k) == 0) {
                ++k;
                break;
            }
        }
        Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        out.x += V.leftCols(k) * y;
        rel = true_residual();
    }
    out.residual = rel;
    out.converged = rel <= tol;
    return out;
}

}  // namespace clab
