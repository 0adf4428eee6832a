#pragma once

#include <vector>

#include "strucgeo/structures.hpp"

namespace sg {

/// Anticommutative algebra with an invariant metric: e_i * e_j = sum_k mult(i,j,k) e_k.
struct QRAlgebra {
    FrameMetric frame;
    Tensor3 mult;

    int dim() const { return frame.dim(); }
    Vec product(const Vec& x, const Vec& y) const;
    /// Matrix of Y -> X * Y.
    Mat left(const Vec& x) const;
};

struct QRAxioms {
    double anticommutativity = 0.0;  // max |mult(i,j,k) + mult(j,i,k)|
    double invariance = 0.0;         // max |<e_i * e_j, e_k> - <e_i, e_j * e_k>|
    bool ok(double tol = 1e-10) const { return anticommutativity <= tol && invariance <= tol; }
};

QRAxioms check_axioms(const QRAlgebra& alg);
/// Validated algebra from a multiplication table; InvalidParams if an axiom fails.
QRAlgebra make_qr_algebra(const FrameMetric& frame, const Tensor3& mult);

/// X * Y = h_X Y for a nearly particular h; NotNearlyParticular when |h+| > 1e-10.
QRAlgebra from_h(const Tensor3& h, const FrameMetric& frame);

/// <AX, Y> = sum_k <X * E_k, Y * E_k> over the frame's orthonormal basis.
Endo fundamental_operator(const QRAlgebra& alg);
/// The same sum over an explicit g-orthonormal basis (columns).
Endo fundamental_operator(const QRAlgebra& alg, const Mat& onb);

struct EigenSpace {
    double lambda = 0.0;
    Mat basis;  // g-orthonormal columns in frame coordinates
};

struct SpectralSplit {
    std::vector<EigenSpace> eigen;  // eigenvalues above the kernel threshold, descending
    Mat kernel;
};

inline constexpr double kClusterTol = 1e-8;

/// Proper subspaces of a g-self-adjoint PSD operator; eigenvalues within cluster_tol (relative) are merged.
SpectralSplit spectral_split(const Endo& A, const FrameMetric& frame, double cluster_tol = kClusterTol);

struct IdealDecomposition {
    Mat abelian;              // I_0 = Ker A
    std::vector<Mat> ideals;  // simple ideals I_1..I_r
    std::vector<EigenSpace> eigen_data;
};

/// Abelian ideal and simple ideals; DecompositionFailure if a closure does not stabilize or an ideal is not simple.
IdealDecomposition ideal_decompose(const QRAlgebra& alg);

/// Largest |<a * b, c>| with a, b in different subspaces among I_0, I_1, ..., I_r.
double cross_product_residual(const QRAlgebra& alg, const IdealDecomposition& d);
/// max |A(X*Y) - AX*Y| and |A(X*Y) - X*AY| over basis pairs.
double commutation_residual(const QRAlgebra& alg, const Endo& A);

/// Every nonzero eigenspace of A is one of the ideals; the commutation identity is asserted when true.
bool is_qra(const QRAlgebra& alg, const IdealDecomposition& d);

}  // namespace sg
