#include "strucgeo/lie.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace sg {

Mat BilinearOps::along(const Vec& x) const {
    const int n = dim();
    Mat out = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        if (x(i) != 0.0) out += x(i) * ops_[static_cast<size_t>(i)];
    return out;
}

Tensor3 BilinearOps::as_tensor() const {
    const int n = dim();
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) t(i, j, k) = ops_[static_cast<size_t>(i)](k, j);
    return t;
}

BilinearOps BilinearOps::from_tensor(const Tensor3& t) {
    const int n = t.dim();
    BilinearOps b(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) b.op(i)(k, j) = t(i, j, k);
    return b;
}

double BilinearOps::max_abs() const {
    double m = 0.0;
    for (const Mat& o : ops_) m = std::max(m, o.size() ? o.cwiseAbs().maxCoeff() : 0.0);
    return m;
}

BilinearOps& BilinearOps::operator+=(const BilinearOps& o) {
    if (o.dim() != dim()) throw Error(Errc::InputShape, "bilinear map dimension mismatch");
    for (size_t i = 0; i < ops_.size(); ++i) ops_[i] += o.ops_[i];
    return *this;
}

BilinearOps& BilinearOps::operator-=(const BilinearOps& o) {
    if (o.dim() != dim()) throw Error(Errc::InputShape, "bilinear map dimension mismatch");
    for (size_t i = 0; i < ops_.size(); ++i) ops_[i] -= o.ops_[i];
    return *this;
}

FrameModel FrameModel::from_brackets(const Mat& gram, const std::vector<std::tuple<int, int, int, double>>& cijk) {
    FrameMetric f(gram);
    const int n = f.dim();
    BilinearOps ad(n);
    for (const auto& [i, j, k, v] : cijk) {
        if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
            throw Error(Errc::InputShape, "bracket index out of range");
        ad.op(i)(k, j) += v;
        ad.op(j)(k, i) -= v;
    }
    return FrameModel(f, ad);
}

FrameModel FrameModel::from_connection_torsion(const FrameMetric& f, const ConnectionCoeffs& conn) {
    const int n = f.dim();
    BilinearOps ad(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ad.op(i).col(j) = conn.op(i).col(j) - conn.op(j).col(i);
    return FrameModel(f, ad);
}

LieDiagnostics validate_lie(const FrameModel& model) {
    const int n = model.dim();
    LieDiagnostics d;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d.antisymmetry = std::max(d.antisymmetry, (model.ad.op(i).col(j) + model.ad.op(j).col(i)).cwiseAbs().maxCoeff());
    // [[e_i,e_j],e_l] + [[e_j,e_l],e_i] + [[e_l,e_i],e_j]
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                const Vec eij = model.ad.op(i).col(j);
                const Vec ejl = model.ad.op(j).col(l);
                const Vec eli = model.ad.op(l).col(i);
                const Vec s = model.ad.along(eij).col(l) + model.ad.along(ejl).col(i) + model.ad.along(eli).col(j);
                d.jacobi = std::max(d.jacobi, s.cwiseAbs().maxCoeff());
            }
    return d;
}

ConnectionCoeffs levi_civita(const FrameModel& model) {
    const int n = model.dim();
    const Mat& G = model.frame.gram();
    // c(i,j,k) = <[e_i,e_j], e_k>
    Tensor3 c(n);
    for (int i = 0; i < n; ++i) {
        const Mat low = G * model.ad.op(i);  // (k, j) -> <[e_i,e_j],e_k>
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) c(i, j, k) = low(k, j);
    }
    ConnectionCoeffs conn(n);
    const Mat& Gi = model.frame.gram_inv();
    for (int i = 0; i < n; ++i) {
        Mat low(n, n);  // (k, j) -> <nabla_{e_i} e_j, e_k>
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) low(k, j) = 0.5 * (c(i, j, k) - c(j, k, i) + c(k, i, j));
        conn.op(i) = Gi * low;
    }
    return conn;
}

Curvature riemann_curvature(const ConnectionCoeffs& conn, const FrameModel& model) {
    const int n = model.dim();
    Curvature R;
    R.n = n;
    R.R.assign(static_cast<size_t>(n * n), Mat::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            R.at(i, j) = conn.op(i) * conn.op(j) - conn.op(j) * conn.op(i) - conn.along(model.ad.op(i).col(j));
    return R;
}

double bianchi_residual(const Curvature& R) {
    double m = 0.0;
    const int n = R.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Vec s = R.at(i, j).col(k) + R.at(j, k).col(i) + R.at(k, i).col(j);
                m = std::max(m, s.cwiseAbs().maxCoeff());
            }
    return m;
}

Tensor3 torsion(const ConnectionCoeffs& conn, const FrameModel& model) {
    const int n = model.dim();
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec v = conn.op(i).col(j) - conn.op(j).col(i) - model.ad.op(i).col(j);
            for (int k = 0; k < n; ++k) t(i, j, k) = v(k);
        }
    return t;
}

std::vector<Mat> covariant_derivative(const ConnectionCoeffs& conn, const Endo& K) {
    const int n = conn.dim();
    require_dim(K, n, "covariant_derivative");
    std::vector<Mat> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(conn.op(i) * K - K * conn.op(i));
    return out;
}

Tensor4 covariant_derivative(const ConnectionCoeffs& conn, const Tensor3& T) {
    const int n = conn.dim();
    require_dim(T, n, "covariant_derivative");
    Tensor4 out(n);
    for (int i = 0; i < n; ++i) {
        const Mat& G = conn.op(i);  // G(m, j) = Gamma^m_{ij}
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int m = 0; m < n; ++m)
                        s += G(m, j) * T(m, k, l) + G(m, k) * T(j, m, l) + G(m, l) * T(j, k, m);
                    out(i, j, k, l) = -s;
                }
    }
    return out;
}

Mat covariant_derivative_covector(const ConnectionCoeffs& conn, const Covector& beta) {
    const int n = conn.dim();
    Mat out(n, n);
    for (int i = 0; i < n; ++i) out.row(i) = -(conn.op(i).transpose() * beta).transpose();
    return out;
}

Mat covariant_derivative_vector(const ConnectionCoeffs& conn, const Vec& x) {
    const int n = conn.dim();
    Mat out(n, n);
    for (int i = 0; i < n; ++i) out.col(i) = conn.op(i) * x;
    return out;
}

double metric_residual(const ConnectionCoeffs& conn, const FrameMetric& frame) {
    double m = 0.0;
    const Mat& G = frame.gram();
    for (int i = 0; i < conn.dim(); ++i) {
        const Mat r = conn.op(i).transpose() * G + G * conn.op(i);
        m = std::max(m, r.cwiseAbs().maxCoeff());
    }
    return m;
}

}  // namespace sg
