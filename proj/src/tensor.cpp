#include "strucgeo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sg {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::InputShape: return "InputShape";
        case Errc::NotOrthogonal: return "NotOrthogonal";
        case Errc::NotPSD: return "NotPSD";
        case Errc::StructureInvalid: return "StructureInvalid";
        case Errc::SingularOneMinusS: return "SingularOneMinusS";
        case Errc::SingularAffinor: return "SingularAffinor";
        case Errc::DegenerateDimension: return "DegenerateDimension";
        case Errc::UnsupportedSpectrum: return "UnsupportedSpectrum";
        case Errc::TaxonomyConstructionError: return "TaxonomyConstructionError";
        case Errc::AmbientViolation: return "AmbientViolation";
        case Errc::NotNearlyParticular: return "NotNearlyParticular";
        case Errc::DecompositionFailure: return "DecompositionFailure";
        case Errc::InternalInconsistency: return "InternalInconsistency";
        case Errc::UnknownCatalogEntry: return "UnknownCatalogEntry";
        case Errc::InvalidParams: return "InvalidParams";
        case Errc::ParseError: return "ParseError";
        case Errc::SeriesNonConvergence: return "SeriesNonConvergence";
    }
    return "Unknown";
}

const char* structure_check_name(StructureCheck c) {
    switch (c) {
        case StructureCheck::None: return "none";
        case StructureCheck::Shape: return "shape";
        case StructureCheck::GramInvalid: return "gram";
        case StructureCheck::ProductSquare: return "P^2=I";
        case StructureCheck::ComplexSquare: return "J^2=-I";
        case StructureCheck::FCube: return "F^3+F=0";
        case StructureCheck::Isometry: return "isometry";
        case StructureCheck::OddDimension: return "odd-dimension";
        case StructureCheck::EvenDimension: return "even-dimension";
        case StructureCheck::XiKernel: return "F(xi)=0";
        case StructureCheck::XiUnit: return "|xi|=1";
        case StructureCheck::EtaDual: return "eta=<.,xi>";
        case StructureCheck::Rank: return "rank(F)=n-1";
        case StructureCheck::AffinorOrder: return "S^k=I";
        case StructureCheck::InvariantSplit: return "S-invariant split";
    }
    return "unknown";
}

void require_dim(const Mat& m, int n, const char* what) {
    if (m.rows() != n || m.cols() != n)
        throw Error(Errc::InputShape, std::string(what) + ": expected " + std::to_string(n) + "x" +
                                          std::to_string(n) + " matrix");
}

void require_dim(const Tensor3& t, int n, const char* what) {
    if (t.dim() != n)
        throw Error(Errc::InputShape, std::string(what) + ": expected tensor of dimension " + std::to_string(n));
}

FrameMetric::FrameMetric(const Mat& gram) : gram_(gram) {
    const int n = static_cast<int>(gram.rows());
    if (n == 0 || gram.cols() != n) throw Error(Errc::InputShape, "gram must be a nonempty square matrix");
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > tol::exact)
        throw Error(Errc::StructureInvalid, "gram is not symmetric", StructureCheck::GramInvalid);
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmax > 0) || es.eigenvalues().minCoeff() <= tol::gram_rel * lmax)
        throw Error(Errc::StructureInvalid, "gram is not positive definite", StructureCheck::GramInvalid);

    gram_inv_ = gram.inverse();
    identity_ = (gram - Mat::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0;

    // Modified Gram-Schmidt on e_1..e_n in the g inner product.
    onb_ = Mat::Identity(n, n);
    for (int a = 0; a < n; ++a) {
        Vec v = onb_.col(a);
        for (int b = 0; b < a; ++b) v -= inner(onb_.col(b), v) * onb_.col(b);
        onb_.col(a) = v / std::sqrt(inner(v, v));
    }
    onb_inv_ = onb_.inverse();
}

FrameMetric FrameMetric::identity(int n) { return FrameMetric(Mat::Identity(n, n)); }

double FrameMetric::norm(const Vec& x) const { return std::sqrt(std::max(0.0, inner(x, x))); }

Vec Tensor3::flat() const { return Eigen::Map<const Vec>(d_.data(), static_cast<Eigen::Index>(d_.size())); }

Tensor3 Tensor3::from_flat(const Vec& v, int n) {
    Tensor3 t(n);
    if (v.size() != static_cast<Eigen::Index>(t.d_.size())) throw Error(Errc::InputShape, "flat tensor size mismatch");
    std::copy(v.data(), v.data() + v.size(), t.d_.begin());
    return t;
}

double Tensor3::max_abs() const {
    double m = 0.0;
    for (double x : d_) m = std::max(m, std::abs(x));
    return m;
}

double Tensor3::frobenius() const {
    double s = 0.0;
    for (double x : d_) s += x * x;
    return std::sqrt(s);
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
    if (o.n_ != n_) throw Error(Errc::InputShape, "tensor dimension mismatch");
    for (size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
    return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
    if (o.n_ != n_) throw Error(Errc::InputShape, "tensor dimension mismatch");
    for (size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
    return *this;
}

Tensor3& Tensor3::operator*=(double s) {
    for (double& x : d_) x *= s;
    return *this;
}

double Tensor4::max_abs() const {
    double m = 0.0;
    for (double x : d_) m = std::max(m, std::abs(x));
    return m;
}

Tensor3 pullback(const Tensor3& h, const Mat& M) {
    const int n = h.dim();
    require_dim(M, n, "pullback");
    // Contract one slot at a time: O(n^4).
    Tensor3 t1(n), t2(n), t3(n);
    for (int a = 0; a < n; ++a)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += h(i, j, k) * M(i, a);
                t1(a, j, k) = s;
            }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += t1(a, j, k) * M(j, b);
                t2(a, b, k) = s;
            }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += t2(a, b, k) * M(k, c);
                t3(a, b, c) = s;
            }
    return t3;
}

Tensor3 change_basis_vector_valued(const Tensor3& t, const Mat& M) {
    const int n = t.dim();
    require_dim(M, n, "change_basis_vector_valued");
    const Mat Minv = M.inverse();
    Tensor3 out(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Vec v = Vec::Zero(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double w = M(i, a) * M(j, b);
                    if (w == 0.0) continue;
                    for (int k = 0; k < n; ++k) v(k) += w * t(i, j, k);
                }
            Vec r = Minv * v;
            for (int c = 0; c < n; ++c) out(a, b, c) = r(c);
        }
    return out;
}

double tensor3_inner(const Tensor3& h1, const Tensor3& h2, const FrameMetric& frame) {
    const int n = frame.dim();
    require_dim(h1, n, "tensor3_inner");
    require_dim(h2, n, "tensor3_inner");
    if (frame.is_identity()) {
        double s = 0.0;
        for (size_t i = 0; i < h1.data().size(); ++i) s += h1.data()[i] * h2.data()[i];
        return s;
    }
    const Tensor3 a = pullback(h1, frame.onb());
    const Tensor3 b = pullback(h2, frame.onb());
    double s = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

Tensor3 act_orthogonal(const Endo& a, const Tensor3& h, const FrameMetric& frame) {
    const int n = frame.dim();
    require_dim(a, n, "act_orthogonal");
    require_dim(h, n, "act_orthogonal");
    const double scale = std::max(1.0, frame.gram().cwiseAbs().maxCoeff());
    if ((a.transpose() * frame.gram() * a - frame.gram()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error(Errc::NotOrthogonal, "act_orthogonal: element is not g-orthogonal");
    return pullback(h, a.inverse());
}

std::pair<Tensor3, Tensor3> split_sym_skew(const Tensor3& h) {
    const int n = h.dim();
    Tensor3 plus(n), minus(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                plus(i, j, k) = 0.5 * (h(i, j, k) + h(j, i, k));
                minus(i, j, k) = h(i, j, k) - plus(i, j, k);
            }
    return {plus, minus};
}

Covector contract_c12(const Tensor3& h, const FrameMetric& frame) {
    const int n = frame.dim();
    require_dim(h, n, "contract_c12");
    const Mat& gi = frame.gram_inv();
    Covector out = Covector::Zero(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out(k) += gi(i, j) * h(i, j, k);
    return out;
}

Tensor3 cyclic_sum(const Tensor3& h) {
    const int n = h.dim();
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) out(i, j, k) = h(i, j, k) + h(j, k, i) + h(k, i, j);
    return out;
}

Endo metric_adjoint(const Endo& F, const FrameMetric& frame) {
    require_dim(F, frame.dim(), "metric_adjoint");
    if (frame.is_identity()) return F.transpose();
    return frame.gram_inv() * F.transpose() * frame.gram();
}

Endo psd_sqrt(const Endo& M, const FrameMetric& frame) {
    const int n = frame.dim();
    require_dim(M, n, "psd_sqrt");
    const Mat& B = frame.onb();
    Mat Mo = frame.onb_inv() * M * B;
    Mo = 0.5 * (Mo + Mo.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Mo);
    Vec ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        if (ev(i) < -1e-10 * scale) throw Error(Errc::NotPSD, "psd_sqrt: negative eigenvalue");
        ev(i) = std::sqrt(std::max(0.0, ev(i)));
    }
    const Mat root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return B * root * frame.onb_inv();
}

double skew_residual(const Tensor3& h) {
    const int n = h.dim();
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) m = std::max(m, std::abs(h(i, j, k) + h(i, k, j)));
    return m;
}

Mat nullspace(const Mat& A, double rel_tol) {
    const Eigen::Index cols = A.cols();
    if (A.rows() == 0) return Mat::Identity(cols, cols);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double thresh = rel_tol * std::max(1.0, smax);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > thresh) ++rank;
    return svd.matrixV().rightCols(cols - rank);
}

Mat orthonormal_span(const Mat& A, double rel_tol) {
    if (A.cols() == 0) return Mat(A.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
    const Vec& s = svd.singularValues();
    const double thresh = rel_tol * std::max(1.0, s.size() ? s(0) : 0.0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > thresh) ++r;
    return svd.matrixU().leftCols(r);
}

}  // namespace sg
