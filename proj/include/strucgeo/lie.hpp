#pragma once

#include <vector>

#include "strucgeo/tensor.hpp"

namespace sg {

/// Bilinear map on frame vectors stored as n operators: op(i) column j = B(e_i, e_j).
class BilinearOps {
public:
    BilinearOps() = default;
    explicit BilinearOps(int n) : ops_(static_cast<size_t>(n), Mat::Zero(n, n)) {}
    explicit BilinearOps(std::vector<Mat> ops) : ops_(std::move(ops)) {}

    int dim() const { return static_cast<int>(ops_.size()); }
    Mat& op(int i) { return ops_[static_cast<size_t>(i)]; }
    const Mat& op(int i) const { return ops_[static_cast<size_t>(i)]; }
    /// Operator Y -> B(X, Y) for a frame vector X.
    Mat along(const Vec& x) const;
    Vec apply(const Vec& x, const Vec& y) const { return along(x) * y; }
    /// Component k of B(e_i, e_j).
    double coeff(int i, int j, int k) const { return ops_[static_cast<size_t>(i)](k, j); }

    Tensor3 as_tensor() const;  // t(i,j,k) = coeff(i,j,k)
    static BilinearOps from_tensor(const Tensor3& t);
    double max_abs() const;

    BilinearOps& operator+=(const BilinearOps& o);
    BilinearOps& operator-=(const BilinearOps& o);
    friend BilinearOps operator+(BilinearOps a, const BilinearOps& b) { return a += b; }
    friend BilinearOps operator-(BilinearOps a, const BilinearOps& b) { return a -= b; }

private:
    std::vector<Mat> ops_;
};

/// Frame connection: op(i) is the matrix of nabla_{e_i} on constant-component fields.
using ConnectionCoeffs = BilinearOps;

/// Left-invariant arena: a metric on the Lie algebra plus its structure constants.
struct FrameModel {
    FrameMetric frame;
    BilinearOps ad;  // ad.op(i) column j = [e_i, e_j]

    FrameModel() = default;
    FrameModel(FrameMetric f, BilinearOps brackets) : frame(std::move(f)), ad(std::move(brackets)) {}
    int dim() const { return frame.dim(); }
    Vec bracket(const Vec& x, const Vec& y) const { return ad.apply(x, y); }

    /// Model from a sparse list of c^k_ij (i<j), antisymmetrized.
    static FrameModel from_brackets(const Mat& gram, const std::vector<std::tuple<int, int, int, double>>& cijk);
    /// Model whose brackets are the torsion of a given connection, c = Gamma_ij - Gamma_ji.
    static FrameModel from_connection_torsion(const FrameMetric& f, const ConnectionCoeffs& conn);
};

struct LieDiagnostics {
    double antisymmetry = 0.0;
    double jacobi = 0.0;
    bool ok() const { return antisymmetry <= 1e-10 && jacobi <= 1e-10; }
};

LieDiagnostics validate_lie(const FrameModel& model);
ConnectionCoeffs levi_civita(const FrameModel& model);

/// Curvature operators R(e_i, e_j), stored at index i*n + j.
struct Curvature {
    int n = 0;
    std::vector<Mat> R;
    const Mat& at(int i, int j) const { return R[static_cast<size_t>(i * n + j)]; }
    Mat& at(int i, int j) { return R[static_cast<size_t>(i * n + j)]; }
    /// Component l of R(e_i, e_j) e_k.
    double operator()(int i, int j, int k, int l) const { return at(i, j)(l, k); }
};

Curvature riemann_curvature(const ConnectionCoeffs& conn, const FrameModel& model);
/// First Bianchi residual for a torsion-free connection.
double bianchi_residual(const Curvature& R);

/// Torsion T(e_i,e_j) = Gamma(e_i,e_j) - Gamma(e_j,e_i) - [e_i,e_j], as vector-valued components t(i,j,k).
Tensor3 torsion(const ConnectionCoeffs& conn, const FrameModel& model);

/// (nabla_{e_i} K) for an Endo K, entry i.
std::vector<Mat> covariant_derivative(const ConnectionCoeffs& conn, const Endo& K);
/// (nabla_{e_i} T)(e_j, e_k, e_l) for a covariant Tensor3.
Tensor4 covariant_derivative(const ConnectionCoeffs& conn, const Tensor3& T);
/// (nabla_{e_i} beta)(e_j) for a covector.
Mat covariant_derivative_covector(const ConnectionCoeffs& conn, const Covector& beta);
/// Column i holds nabla_{e_i} X for a constant-component vector.
Mat covariant_derivative_vector(const ConnectionCoeffs& conn, const Vec& x);
/// max |(nabla_{e_i} g)(e_j, e_k)|
double metric_residual(const ConnectionCoeffs& conn, const FrameMetric& frame);

}  // namespace sg
