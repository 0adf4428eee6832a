#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "strucgeo/error.hpp"

namespace sg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// (1,1) tensor in frame components; column j holds the image of e_j.
using Endo = Mat;
/// 1-form in frame components, beta_i = beta(e_i).
using Covector = Vec;

namespace tol {
inline constexpr double exact = 1e-12;
inline constexpr double eigen = 1e-10;
inline constexpr double gram_rel = 1e-10;
}  // namespace tol

/// Inner product <e_i, e_j> on a frame, with a cached g-orthonormal basis.
class FrameMetric {
public:
    FrameMetric() = default;
    explicit FrameMetric(const Mat& gram);
    static FrameMetric identity(int n);

    int dim() const { return static_cast<int>(gram_.rows()); }
    const Mat& gram() const { return gram_; }
    const Mat& gram_inv() const { return gram_inv_; }
    /// Columns form a g-orthonormal basis (upper triangular, from Gram-Schmidt).
    const Mat& onb() const { return onb_; }
    const Mat& onb_inv() const { return onb_inv_; }
    bool is_identity() const { return identity_; }

    double inner(const Vec& x, const Vec& y) const { return x.dot(gram_ * y); }
    double norm(const Vec& x) const;
    Covector lower(const Vec& x) const { return gram_ * x; }
    Vec raise(const Covector& b) const { return gram_inv_ * b; }

private:
    Mat gram_;
    Mat gram_inv_;
    Mat onb_;
    Mat onb_inv_;
    bool identity_ = true;
};

/// Dense n x n x n array; for h the convention is h(i,j,k) = <h_{e_i} e_j, e_k>.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int n) : n_(n), d_(static_cast<size_t>(n) * n * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int i, int j, int k) { return d_[(static_cast<size_t>(i) * n_ + j) * n_ + k]; }
    double operator()(int i, int j, int k) const { return d_[(static_cast<size_t>(i) * n_ + j) * n_ + k]; }

    const std::vector<double>& data() const { return d_; }
    std::vector<double>& data() { return d_; }
    Vec flat() const;
    static Tensor3 from_flat(const Vec& v, int n);

    double max_abs() const;
    double frobenius() const;

    Tensor3& operator+=(const Tensor3& o);
    Tensor3& operator-=(const Tensor3& o);
    Tensor3& operator*=(double s);
    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

private:
    int n_ = 0;
    std::vector<double> d_;
};

/// Dense n^4 array used for covariant derivatives of Tensor3 and for curvature.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int n) : n_(n), d_(static_cast<size_t>(n) * n * n * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int i, int j, int k, int l) {
        return d_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return d_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    double max_abs() const;

private:
    int n_ = 0;
    std::vector<double> d_;
};

/// h'(a,b,c) = sum h(i,j,k) M(i,a) M(j,b) M(k,c): components of h on the basis given by the columns of M.
Tensor3 pullback(const Tensor3& h, const Mat& M);

/// Vector-valued 2-form components: out(i,j,:) = M^{-1} T(M e_i, M e_j).
Tensor3 change_basis_vector_valued(const Tensor3& t, const Mat& M);

double tensor3_inner(const Tensor3& h1, const Tensor3& h2, const FrameMetric& frame);
Tensor3 act_orthogonal(const Endo& a, const Tensor3& h, const FrameMetric& frame);
std::pair<Tensor3, Tensor3> split_sym_skew(const Tensor3& h);
Covector contract_c12(const Tensor3& h, const FrameMetric& frame);
Tensor3 cyclic_sum(const Tensor3& h);
Endo metric_adjoint(const Endo& F, const FrameMetric& frame);
Endo psd_sqrt(const Endo& M, const FrameMetric& frame);

/// max |h(i,j,k) + h(i,k,j)|
double skew_residual(const Tensor3& h);

/// Columns span the null space of A; singular values below rel_tol * max(1, sigma_max) count as zero.
Mat nullspace(const Mat& A, double rel_tol = 1e-9);
/// Orthonormal basis (Euclidean) of the column span of A.
Mat orthonormal_span(const Mat& A, double rel_tol = 1e-9);

/// Matrix of a linear map on tensors, built by evaluating f on the unit tensors.
template <class F>
Mat linear_map_matrix(F&& f, int n) {
    const int N = n * n * n;
    Mat out;
    for (int c = 0; c < N; ++c) {
        Tensor3 e(n);
        e.data()[c] = 1.0;
        Vec col = f(e);
        if (c == 0) out = Mat::Zero(col.size(), N);
        out.col(c) = col;
    }
    return out;
}

void require_dim(const Mat& m, int n, const char* what);
void require_dim(const Tensor3& t, int n, const char* what);

}  // namespace sg
