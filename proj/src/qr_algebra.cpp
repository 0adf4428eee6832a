#include "strucgeo/qr_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "strucgeo/classifier.hpp"

namespace sg {

namespace {

Mat hstack(const Mat& a, const Mat& b) {
    Mat out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

/// Left multiplication operators in orthonormal coordinates: L[k](:, j) = E_k * E_j.
std::vector<Mat> left_ops(const Tensor3& mc) {
    const int n = mc.dim();
    std::vector<Mat> L(static_cast<size_t>(n), Mat(n, n));
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int c = 0; c < n; ++c) L[static_cast<size_t>(k)](c, j) = mc(k, j, c);
    return L;
}

/// Smallest subspace containing v and closed under multiplication by every basis vector.
Mat closure(const Vec& v, const std::vector<Mat>& L) {
    const int n = static_cast<int>(v.size());
    Mat S = orthonormal_span(v);
    for (int iter = 0; iter < n * n; ++iter) {
        Mat grown = S;
        for (const Mat& Lk : L) grown = hstack(grown, Lk * S);
        const Mat next = orthonormal_span(grown);
        if (next.cols() == S.cols()) return S;
        S = next;
    }
    throw Error(Errc::DecompositionFailure, "ideal closure did not stabilize");
}

bool overlaps(const Mat& a, const Mat& b) { return orthonormal_span(hstack(a, b)).cols() < a.cols() + b.cols(); }

double projector_distance(const Mat& a, const Mat& b) {
    return (a * a.transpose() - b * b.transpose()).cwiseAbs().maxCoeff();
}

Tensor3 orthonormal_mult(const QRAlgebra& alg) { return change_basis_vector_valued(alg.mult, alg.frame.onb()); }

}  // namespace

Vec QRAlgebra::product(const Vec& x, const Vec& y) const {
    const int n = dim();
    Vec out = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (x(i) == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            const double w = x(i) * y(j);
            if (w == 0.0) continue;
            for (int k = 0; k < n; ++k) out(k) += w * mult(i, j, k);
        }
    }
    return out;
}

Mat QRAlgebra::left(const Vec& x) const {
    const int n = dim();
    Mat out(n, n);
    for (int j = 0; j < n; ++j) out.col(j) = product(x, Vec::Unit(n, j));
    return out;
}

QRAxioms check_axioms(const QRAlgebra& alg) {
    const int n = alg.dim();
    require_dim(alg.mult, n, "check_axioms");
    const Mat& G = alg.frame.gram();
    Tensor3 low(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int c = 0; c < n; ++c) s += alg.mult(i, j, c) * G(c, k);
                low(i, j, k) = s;
            }
    QRAxioms ax;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                ax.anticommutativity = std::max(ax.anticommutativity, std::abs(alg.mult(i, j, k) + alg.mult(j, i, k)));
                ax.invariance = std::max(ax.invariance, std::abs(low(i, j, k) - low(j, k, i)));
            }
    return ax;
}

QRAlgebra make_qr_algebra(const FrameMetric& frame, const Tensor3& mult) {
    QRAlgebra alg{frame, mult};
    const QRAxioms ax = check_axioms(alg);
    if (!ax.ok()) {
        std::ostringstream os;
        os << "multiplication violates the QR axioms (anticommutativity " << ax.anticommutativity << ", invariance "
           << ax.invariance << ")";
        throw Error(Errc::InvalidParams, os.str());
    }
    return alg;
}

QRAlgebra from_h(const Tensor3& h, const FrameMetric& frame) {
    const int n = frame.dim();
    require_dim(h, n, "from_h");
    const Tensor3 hc = pullback(h, frame.onb());
    double plus = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) plus += std::pow(0.5 * (hc(i, j, k) + hc(j, i, k)), 2);
    plus = std::sqrt(plus);
    if (n >= 2) classify(hc, *shared_taxonomy(TaxonomyId::ON3, n));
    if (plus > 1e-10) {
        std::ostringstream os;
        os << "h is not nearly particular (|h+| = " << plus << ")";
        throw Error(Errc::NotNearlyParticular, os.str());
    }
    const BilinearOps H = h_operators(h, frame);
    QRAlgebra alg{frame, Tensor3(n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) alg.mult(i, j, k) = H.op(i)(k, j);
    const QRAxioms ax = check_axioms(alg);
    if (!ax.ok(1e-10 * std::max(1.0, hc.max_abs())))
        throw Error(Errc::InternalInconsistency, "algebra built from a nearly particular h violates the QR axioms");
    return alg;
}

Endo fundamental_operator(const QRAlgebra& alg) { return fundamental_operator(alg, alg.frame.onb()); }

Endo fundamental_operator(const QRAlgebra& alg, const Mat& onb) {
    const int n = alg.dim();
    require_dim(onb, n, "fundamental_operator");
    const Mat& G = alg.frame.gram();
    // Rows of P_k: (e_a * E_k) for a = 1..n.
    Mat M = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        Mat P(n, n);
        for (int a = 0; a < n; ++a) P.col(a) = alg.product(Vec::Unit(n, a), onb.col(k));
        M += P.transpose() * G * P;
    }
    return alg.frame.gram_inv() * M;
}

SpectralSplit spectral_split(const Endo& A, const FrameMetric& frame, double cluster_tol) {
    const int n = frame.dim();
    require_dim(A, n, "spectral_split");
    const Mat& B = frame.onb();
    Mat Ac = frame.onb_inv() * A * B;
    Ac = 0.5 * (Ac + Ac.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Ac);
    const Vec& lam = es.eigenvalues();
    const Mat& V = es.eigenvectors();
    const double scale = lam.cwiseAbs().maxCoeff();
    const double thresh = cluster_tol * scale;

    SpectralSplit out;
    std::vector<int> kernel_cols;
    int i = n - 1;
    while (i >= 0) {
        if (scale == 0.0 || lam(i) <= thresh) {
            kernel_cols.push_back(i);
            --i;
            continue;
        }
        int j = i;
        while (j - 1 >= 0 && lam(j) - lam(j - 1) <= thresh && lam(j - 1) > thresh) --j;
        EigenSpace es_out;
        es_out.lambda = lam.segment(j, i - j + 1).mean();
        es_out.basis = B * V.middleCols(j, i - j + 1);
        out.eigen.push_back(std::move(es_out));
        i = j - 1;
    }
    out.kernel = Mat(n, static_cast<Eigen::Index>(kernel_cols.size()));
    for (size_t c = 0; c < kernel_cols.size(); ++c) out.kernel.col(static_cast<Eigen::Index>(c)) = B * V.col(kernel_cols[c]);
    return out;
}

IdealDecomposition ideal_decompose(const QRAlgebra& alg) {
    const int n = alg.dim();
    const Mat& B = alg.frame.onb();
    const Endo A = fundamental_operator(alg);
    const SpectralSplit split = spectral_split(A, alg.frame);

    IdealDecomposition d;
    d.abelian = split.kernel;
    d.eigen_data = split.eigen;

    const Tensor3 mc = orthonormal_mult(alg);
    const std::vector<Mat> L = left_ops(mc);
    const double scale = std::max(1.0, mc.max_abs());
    const Mat K = alg.frame.onb_inv() * split.kernel;
    for (Eigen::Index c = 0; c < K.cols(); ++c)
        for (const Mat& Lk : L)
            if ((Lk * K.col(c)).cwiseAbs().maxCoeff() > 1e-8 * scale)
                throw Error(Errc::DecompositionFailure, "kernel of the fundamental operator does not annihilate T");

    // Orthonormal basis Q of the complement of the kernel, in orthonormal coordinates.
    Mat Q(n, 0);
    for (const EigenSpace& e : split.eigen) Q = hstack(Q, alg.frame.onb_inv() * e.basis);
    const Eigen::Index dq = Q.cols();
    if (dq == 0) return d;

    // Symmetric elements of the commutant of all multiplications separate the simple ideals.
    Mat C(static_cast<Eigen::Index>(n) * dq * dq, dq * dq);
    const Mat Id = Mat::Identity(dq, dq);
    for (int k = 0; k < n; ++k) {
        const Mat W = Q.transpose() * L[static_cast<size_t>(k)] * Q;
        Mat blk(dq * dq, dq * dq);
        for (Eigen::Index a = 0; a < dq; ++a)
            for (Eigen::Index b = 0; b < dq; ++b) blk.block(a * dq, b * dq, dq, dq) = W(b, a) * Id;
        for (Eigen::Index a = 0; a < dq; ++a) blk.block(a * dq, a * dq, dq, dq) -= W;
        C.middleRows(k * dq * dq, dq * dq) = blk;
    }
    const Mat Z = nullspace(C);
    std::mt19937_64 rng(0x5157);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec coeff(Z.cols());
    for (Eigen::Index c = 0; c < Z.cols(); ++c) coeff(c) = gauss(rng);
    const Vec zflat = Z * coeff;
    Mat Zm = Eigen::Map<const Mat>(zflat.data(), dq, dq);
    Zm = 0.5 * (Zm + Zm.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Zm);

    std::vector<Mat> ideals;
    for (Eigen::Index c = 0; c < dq; ++c) {
        Mat I = closure(Q * es.eigenvectors().col(c), L);
        bool merged = true;
        while (merged) {
            merged = false;
            for (auto it = ideals.begin(); it != ideals.end(); ++it)
                if (overlaps(*it, I)) {
                    I = orthonormal_span(hstack(*it, I));
                    ideals.erase(it);
                    merged = true;
                    break;
                }
        }
        ideals.push_back(I);
    }

    Eigen::Index total = 0;
    for (size_t a = 0; a < ideals.size(); ++a) {
        total += ideals[a].cols();
        for (size_t b = a + 1; b < ideals.size(); ++b)
            if ((ideals[a].transpose() * ideals[b]).cwiseAbs().maxCoeff() > 1e-8)
                throw Error(Errc::DecompositionFailure, "ideals are not orthogonal");
        for (Eigen::Index c = 0; c < ideals[a].cols(); ++c)
            if (closure(ideals[a].col(c), L).cols() != ideals[a].cols())
                throw Error(Errc::DecompositionFailure, "ideal has a proper sub-ideal");
    }
    if (total != dq) throw Error(Errc::DecompositionFailure, "ideals do not span the complement of the kernel");
    std::sort(ideals.begin(), ideals.end(), [](const Mat& a, const Mat& b) { return a.cols() > b.cols(); });
    for (const Mat& I : ideals) d.ideals.push_back(B * I);
    return d;
}

double cross_product_residual(const QRAlgebra& alg, const IdealDecomposition& d) {
    std::vector<Mat> parts{d.abelian};
    for (const Mat& I : d.ideals) parts.push_back(I);
    double worst = 0.0;
    for (size_t p = 0; p < parts.size(); ++p)
        for (size_t q = 0; q < parts.size(); ++q) {
            if (p == q) continue;
            for (Eigen::Index a = 0; a < parts[p].cols(); ++a)
                for (Eigen::Index b = 0; b < parts[q].cols(); ++b)
                    worst = std::max(worst, alg.product(parts[p].col(a), parts[q].col(b)).cwiseAbs().maxCoeff());
        }
    return worst;
}

double commutation_residual(const QRAlgebra& alg, const Endo& A) {
    const int n = alg.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec ei = Vec::Unit(n, i), ej = Vec::Unit(n, j);
            const Vec lhs = A * alg.product(ei, ej);
            worst = std::max(worst, (lhs - alg.product(A * ei, ej)).cwiseAbs().maxCoeff());
            worst = std::max(worst, (lhs - alg.product(ei, A * ej)).cwiseAbs().maxCoeff());
        }
    return worst;
}

bool is_qra(const QRAlgebra& alg, const IdealDecomposition& d) {
    if (d.eigen_data.size() != d.ideals.size()) return false;
    const Mat& Binv = alg.frame.onb_inv();
    std::vector<bool> used(d.ideals.size(), false);
    for (const EigenSpace& e : d.eigen_data) {
        const Mat U = Binv * e.basis;
        bool found = false;
        for (size_t k = 0; k < d.ideals.size() && !found; ++k) {
            if (used[k] || d.ideals[k].cols() != U.cols()) continue;
            if (projector_distance(U, Binv * d.ideals[k]) <= 1e-8) used[k] = found = true;
        }
        if (!found) return false;
    }
    const Endo A = fundamental_operator(alg);
    const double r = commutation_residual(alg, A);
    if (r > 1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff() * alg.mult.max_abs()))
        throw Error(Errc::InternalInconsistency, "QR-algebra violates A(X*Y) = AX*Y = X*AY");
    return true;
}

}  // namespace sg
