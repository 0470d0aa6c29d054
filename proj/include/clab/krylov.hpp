#pragma once

#include <functional>

#include <Eigen/Dense>

namespace clab {

using LinearOp = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct GmresResult {
    Eigen::VectorXd x;
    int iterations = 0;     // total Arnoldi steps
    double residual = 0;    // ||b - A x|| / ||b||, recomputed at the end
    bool converged = false;
};

// Restarted GMRES over R^m. A real-linear map on complex data is handled by
// the caller packing (re, im) pairs.
GmresResult gmres(const LinearOp& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x0, double tol,
                  int max_iter, int restart = 60);

}  // namespace clab
