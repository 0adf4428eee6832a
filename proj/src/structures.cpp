#include "strucgeo/structures.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>

namespace sg {

namespace {

constexpr double kValidateTol = 1e-10;

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void check(double residual, StructureCheck what, const std::string& msg) {
    if (!(residual <= kValidateTol))
        throw Error(Errc::StructureInvalid, msg + " (residual " + std::to_string(residual) + ")", what);
}

/// g-orthonormal basis of the image of a g-self-adjoint projection.
Mat image_basis(const Endo& pi, const FrameMetric& frame) {
    const Mat& Q = frame.onb();
    const Mat hat = frame.onb_inv() * pi * Q;
    const Mat sym = 0.5 * (hat + hat.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 0.5) keep.push_back(i);
    Mat out(frame.dim(), static_cast<Eigen::Index>(keep.size()));
    for (size_t c = 0; c < keep.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = Q * es.eigenvectors().col(keep[c]);
    return out;
}

/// Pairs (E_i, K E_i) spanning the columns of `space`, K a g-isometric complex structure on it.
Mat complex_adapted(const Mat& space, const Endo& K, const FrameMetric& frame) {
    const Eigen::Index m = space.cols();
    std::vector<Vec> es;
    std::vector<Vec> ks;
    auto project = [&](Vec v) {
        for (size_t a = 0; a < es.size(); ++a) {
            v -= frame.inner(es[a], v) * es[a];
            v -= frame.inner(ks[a], v) * ks[a];
        }
        return v;
    };
    for (Eigen::Index c = 0; c < m && static_cast<Eigen::Index>(2 * es.size()) < m; ++c) {
        Vec v = project(space.col(c));
        const double nv = frame.norm(v);
        if (nv < 1e-6) continue;
        v /= nv;
        es.push_back(v);
        ks.push_back(K * v);
    }
    if (static_cast<Eigen::Index>(2 * es.size()) != m)
        throw Error(Errc::StructureInvalid, "adapted basis construction failed", StructureCheck::Isometry);
    const Eigen::Index n = static_cast<Eigen::Index>(es.size());
    Mat out(frame.dim(), m);
    for (Eigen::Index a = 0; a < n; ++a) {
        out.col(a) = es[static_cast<size_t>(a)];
        out.col(n + a) = ks[static_cast<size_t>(a)];
    }
    return out;
}

double isometry_residual(const Endo& T, const FrameMetric& f) {
    return max_abs(T.transpose() * f.gram() * T - f.gram());
}

Mat matrix_power(const Mat& S, int k) {
    Mat out = Mat::Identity(S.rows(), S.cols());
    for (int i = 0; i < k; ++i) out = out * S;
    return out;
}

Mat lower_ops(const Mat& H, const Mat& G) { return G * H; }

/// t(u, v, w) for frame vectors.
double eval3(const Tensor3& t, const Vec& u, const Vec& v, const Vec& w) {
    const int n = t.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        if (u(i) == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            if (v(j) == 0.0) continue;
            const double uv = u(i) * v(j);
            for (int k = 0; k < n; ++k) s += uv * t(i, j, k) * w(k);
        }
    }
    return s;
}

/// Vector t(u, v, .) of a vector-valued form.
Vec eval_vv(const Tensor3& t, const Vec& u, const Vec& v) {
    const int n = t.dim();
    Vec out = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double uv = u(i) * v(j);
            if (uv == 0.0) continue;
            for (int k = 0; k < n; ++k) out(k) += uv * t(i, j, k);
        }
    return out;
}

Vec unit(int n, int i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    return e;
}

Tensor3 vv_from(int n, const std::function<Vec(int, int)>& f) {
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec v = f(i, j);
            for (int k = 0; k < n; ++k) t(i, j, k) = v(k);
        }
    return t;
}

const AlmostContact& contact_of(const DecoratedStructure& ds) {
    if (ds.kind != StructureKind::AlmostContact)
        throw Error(Errc::StructureInvalid, "operation requires an almost contact metric structure");
    return std::get<AlmostContact>(ds.structure);
}

void require_hermitian(const DecoratedStructure& ds) {
    if (ds.kind != StructureKind::AlmostHermitian)
        throw Error(Errc::StructureInvalid, "operation requires an almost Hermitian structure");
}

}  // namespace

StructureKind kind_of(const StructureTensor& s) { return static_cast<StructureKind>(s.index()); }

const char* kind_name(StructureKind k) {
    switch (k) {
        case StructureKind::AlmostProduct: return "almost_product";
        case StructureKind::AlmostHermitian: return "almost_hermitian";
        case StructureKind::FStructure: return "f_structure";
        case StructureKind::AlmostContact: return "almost_contact";
        case StructureKind::SigmaAffinor: return "sigma_affinor";
    }
    return "unknown";
}

const Endo& affinor_of(const StructureTensor& s) {
    return std::visit(
        [](const auto& v) -> const Endo& {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AlmostProduct>) return v.P;
            else if constexpr (std::is_same_v<T, AlmostHermitian>) return v.J;
            else if constexpr (std::is_same_v<T, SigmaAffinor>) return v.S;
            else return v.F;
        },
        s);
}

AlmostContact make_almost_contact(const Endo& F, const Vec& xi, const FrameMetric& frame) {
    return AlmostContact{F, xi, frame.lower(xi)};
}

DecoratedStructure validate_structure(const StructureTensor& s, const FrameMetric& frame) {
    const int n = frame.dim();
    const Mat I = Mat::Identity(n, n);
    DecoratedStructure ds;
    ds.structure = s;
    ds.kind = kind_of(s);
    ds.frame = frame;
    ds.tensor = affinor_of(s);
    require_dim(ds.tensor, n, "validate_structure");
    const Endo& T = ds.tensor;

    switch (ds.kind) {
        case StructureKind::AlmostProduct: {
            check(max_abs(T * T - I), StructureCheck::ProductSquare, "P^2 != I");
            check(isometry_residual(T, frame), StructureCheck::Isometry, "P is not an isometry");
            ds.pi1 = 0.5 * (I + T);
            ds.pi2 = 0.5 * (I - T);
            break;
        }
        case StructureKind::AlmostHermitian: {
            if (n % 2 != 0)
                throw Error(Errc::StructureInvalid, "almost Hermitian structure needs even dimension",
                            StructureCheck::EvenDimension);
            check(max_abs(T * T + I), StructureCheck::ComplexSquare, "J^2 != -I");
            check(isometry_residual(T, frame), StructureCheck::Isometry, "J is not an isometry");
            ds.pi1 = Mat::Zero(n, n);
            ds.pi2 = I;
            ds.half_dim = n / 2;
            break;
        }
        case StructureKind::FStructure:
        case StructureKind::AlmostContact: {
            check(max_abs(T * T * T + T), StructureCheck::FCube, "F^3 + F != 0");
            ds.pi1 = T * T + I;
            ds.pi2 = -(T * T);
            check(max_abs(frame.gram() * ds.pi2 - ds.pi2.transpose() * frame.gram()), StructureCheck::Isometry,
                  "ker F is not orthogonal to im F");
            check(max_abs(ds.pi2.transpose() * (T.transpose() * frame.gram() * T - frame.gram()) * ds.pi2),
                  StructureCheck::Isometry, "F is not an isometry on V");
            if (ds.kind == StructureKind::AlmostContact) {
                const auto& ac = std::get<AlmostContact>(s);
                if (ac.xi.size() != n || ac.eta.size() != n)
                    throw Error(Errc::InputShape, "xi and eta must have the frame dimension", StructureCheck::Shape);
                if (n % 2 != 1)
                    throw Error(Errc::StructureInvalid, "almost contact structure needs odd dimension",
                                StructureCheck::OddDimension);
                check(max_abs(T * ac.xi), StructureCheck::XiKernel, "F xi != 0");
                check(std::abs(frame.norm(ac.xi) - 1.0), StructureCheck::XiUnit, "|xi| != 1");
                check(max_abs(ac.eta - frame.lower(ac.xi)), StructureCheck::EtaDual, "eta is not dual to xi");
                Eigen::FullPivLU<Mat> lu(T);
                lu.setThreshold(1e-10);
                if (lu.rank() != n - 1)
                    throw Error(Errc::StructureInvalid, "rank(F) != n - 1", StructureCheck::Rank);
                ds.xi = ac.xi;
                ds.eta = ac.eta;
                ds.half_dim = (n - 1) / 2;
            }
            break;
        }
        case StructureKind::SigmaAffinor: {
            const auto& sa = std::get<SigmaAffinor>(s);
            check(isometry_residual(T, frame), StructureCheck::Isometry, "S is not an isometry");
            if (sa.order) {
                if (*sa.order < 1) throw Error(Errc::InvalidParams, "affinor order must be positive");
                check(max_abs(matrix_power(T, *sa.order) - I), StructureCheck::AffinorOrder, "S^k != I");
            }
            ds.order = sa.order;
            const Mat& Q = frame.onb();
            const Mat hat = frame.onb_inv() * T * Q;
            const Mat k1 = nullspace(hat - Mat::Identity(n, n), 1e-9);
            const Mat p1hat = k1 * k1.transpose();
            ds.pi1 = Q * p1hat * frame.onb_inv();
            ds.pi2 = I - ds.pi1;
            check(max_abs(T * ds.pi1 - ds.pi1 * T), StructureCheck::InvariantSplit, "T1 is not S-invariant");
            break;
        }
    }

    ds.L_basis = image_basis(ds.pi1, frame);
    ds.V_basis = image_basis(ds.pi2, frame);
    if (ds.kind == StructureKind::AlmostHermitian) {
        ds.adapted = complex_adapted(ds.V_basis, T, frame);
    } else if (ds.kind == StructureKind::AlmostContact) {
        ds.adapted = Mat(n, n);
        ds.adapted.leftCols(n - 1) = complex_adapted(ds.V_basis, T, frame);
        ds.adapted.col(n - 1) = ds.xi;
        ds.L_basis = ds.xi;
    } else {
        ds.adapted = Mat(n, n);
        ds.adapted << ds.V_basis, ds.L_basis;
    }
    return ds;
}

ConnectionCoeffs canonical_connection_sigma(const DecoratedStructure& ds, const ConnectionCoeffs& nabla,
                                            SigmaFormula formula) {
    if (ds.kind != StructureKind::SigmaAffinor)
        throw Error(Errc::StructureInvalid, "sigma formula requires a sigma-affinor");
    const int n = ds.frame.dim();
    const Mat& S = ds.tensor;
    ConnectionCoeffs out(n);
    if (formula == SigmaFormula::FiniteOrder) {
        if (!ds.order) throw Error(Errc::InvalidParams, "finite-order formula needs the affinor order");
        const int k = *ds.order;
        std::vector<Mat> pw(static_cast<size_t>(k + 1));
        pw[0] = Mat::Identity(n, n);
        for (int j = 1; j <= k; ++j) pw[static_cast<size_t>(j)] = pw[static_cast<size_t>(j - 1)] * S;
        for (int i = 0; i < n; ++i) {
            Mat acc = Mat::Zero(n, n);
            for (int j = 0; j < k; ++j) acc += pw[static_cast<size_t>(j)] * nabla.op(i) * pw[static_cast<size_t>(k - j)];
            out.op(i) = acc / static_cast<double>(k);
        }
        return out;
    }
    const Mat& V = ds.V_basis;
    if (V.cols() == 0) return nabla;
    const Mat& G = ds.frame.gram();
    const Mat M = V.transpose() * G * (Mat::Identity(n, n) - S) * V;
    Eigen::JacobiSVD<Mat> svd(M);
    const Vec& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0)))
        throw Error(Errc::SingularOneMinusS, "I - S is singular on the complement of the mirror directions");
    const Mat Minv = M.inverse();
    const Mat Sinv = S.inverse();
    for (int i = 0; i < n; ++i) {
        const Vec xi = V * (Minv * (V.transpose() * G.col(i)));
        const Mat Nx = nabla.along(xi);
        out.op(i) = nabla.op(i) - (Nx * S - S * Nx) * Sinv;
    }
    return out;
}

ConnectionCoeffs canonical_connection(const DecoratedStructure& ds, const ConnectionCoeffs& nabla) {
    const int n = ds.frame.dim();
    if (nabla.dim() != n) throw Error(Errc::InputShape, "connection dimension mismatch");
    ConnectionCoeffs out(n);
    const Mat& T = ds.tensor;
    for (int i = 0; i < n; ++i) {
        const Mat& N = nabla.op(i);
        switch (ds.kind) {
            case StructureKind::AlmostProduct:
                out.op(i) = ds.pi1 * N * ds.pi1 + ds.pi2 * N * ds.pi2;
                break;
            case StructureKind::AlmostHermitian:
                out.op(i) = 0.5 * (N - T * N * T);
                break;
            case StructureKind::FStructure:
            case StructureKind::AlmostContact:
                out.op(i) = ds.pi1 * N * ds.pi1 + 0.5 * ds.pi2 * (N * ds.pi2 - T * N * T * ds.pi2);
                break;
            case StructureKind::SigmaAffinor:
                return canonical_connection_sigma(ds, nabla, ds.order ? SigmaFormula::FiniteOrder : SigmaFormula::General);
        }
    }
    return out;
}

BilinearOps h_operators(const Tensor3& h, const FrameMetric& frame) {
    const int n = h.dim();
    BilinearOps H(n);
    for (int i = 0; i < n; ++i) {
        Mat low(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) low(k, j) = h(i, j, k);
        H.op(i) = frame.gram_inv() * low;
    }
    return H;
}

Tensor3 h_from_operators(const BilinearOps& H, const FrameMetric& frame) {
    const int n = H.dim();
    Tensor3 h(n);
    for (int i = 0; i < n; ++i) {
        const Mat low = lower_ops(H.op(i), frame.gram());
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) h(i, j, k) = low(k, j);
    }
    return h;
}

Tensor3 second_fundamental_from(const FrameMetric& frame, const ConnectionCoeffs& nabla,
                                const ConnectionCoeffs& nabla_bar) {
    return h_from_operators(nabla - nabla_bar, frame);
}

Tensor3 second_fundamental(const DecoratedStructure& ds, const ConnectionCoeffs& nabla) {
    return second_fundamental_from(ds.frame, nabla, canonical_connection(ds, nabla));
}

Tensor3 second_fundamental_closed(const DecoratedStructure& ds, const ConnectionCoeffs& nabla) {
    const int n = ds.frame.dim();
    const Mat& T = ds.tensor;
    BilinearOps H(n);
    if (ds.kind == StructureKind::SigmaAffinor)
        return second_fundamental_from(ds.frame, nabla, canonical_connection_sigma(ds, nabla, SigmaFormula::General));
    for (int i = 0; i < n; ++i) {
        const Mat& N = nabla.op(i);
        const Mat dT = N * T - T * N;
        switch (ds.kind) {
            case StructureKind::AlmostProduct: H.op(i) = 0.5 * dT * T; break;
            case StructureKind::AlmostHermitian: H.op(i) = -0.5 * dT * T; break;
            default:
                H.op(i) = ds.pi1 * N * ds.pi2 + ds.pi2 * N * ds.pi1 + 0.5 * ds.pi2 * (N * ds.pi2 + T * N * T * ds.pi2);
                break;
        }
    }
    return h_from_operators(H, ds.frame);
}

Tensor3 torsion_bar(const Tensor3& h, const FrameMetric& frame) {
    const BilinearOps H = h_operators(h, frame);
    return vv_from(h.dim(), [&](int i, int j) -> Vec { return -(H.op(i).col(j) - H.op(j).col(i)); });
}

double curvature_relation_check(const FrameModel& model, const ConnectionCoeffs& nabla,
                                const ConnectionCoeffs& nabla_bar, const Tensor3& h) {
    const int n = model.dim();
    const Curvature R = riemann_curvature(nabla, model);
    const Curvature Rb = riemann_curvature(nabla_bar, model);
    const BilinearOps H = h_operators(h, model.frame);
    const Tensor3 Tb = torsion(nabla_bar, model);
    auto dh = [&](int i, int j) -> Mat {
        const Mat& Nb = nabla_bar.op(i);
        return Nb * H.op(j) - H.op(j) * Nb - H.along(Nb.col(j));
    };
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vec t(n);
            for (int k = 0; k < n; ++k) t(k) = Tb(i, j, k);
            const Mat rhs = Rb.at(i, j) + dh(i, j) - dh(j, i) + H.op(i) * H.op(j) - H.op(j) * H.op(i) + H.along(t);
            m = std::max(m, max_abs(R.at(i, j) - rhs));
        }
    return m;
}

Tensor3 nijenhuis(const Endo& F, const FrameModel& model) {
    const int n = model.dim();
    require_dim(F, n, "nijenhuis");
    const Mat F2 = F * F;
    return vv_from(n, [&](int i, int j) -> Vec {
        const Vec x = unit(n, i), y = unit(n, j);
        const Vec Fx = F * x, Fy = F * y;
        return model.bracket(Fx, Fy) - F * model.bracket(Fx, y) - F * model.bracket(x, Fy) + F2 * model.bracket(x, y);
    });
}

Tensor3 nijenhuis_product(const Endo& P, const Tensor3& tv) {
    const int n = tv.dim();
    return vv_from(n, [&](int i, int j) -> Vec {
        return -2.0 * (eval_vv(tv, P.col(i), P.col(j)) + eval_vv(tv, unit(n, i), unit(n, j)));
    });
}

Tensor3 nijenhuis_hermitian(const Endo& J, const Tensor3& h, const FrameMetric& frame) {
    const int n = h.dim();
    const BilinearOps H = h_operators(h, frame);
    auto hm = [&](const Vec& x, const Vec& y) -> Vec { return 0.5 * (H.apply(x, y) - H.apply(y, x)); };
    return vv_from(n, [&](int i, int j) -> Vec {
        const Vec x = unit(n, i), y = unit(n, j);
        return 4.0 * (hm(J * x, J * y) - hm(x, y));
    });
}

Tensor3 nijenhuis_contact(const Endo& F, const Tensor3& h, const FrameMetric& frame) {
    const int n = h.dim();
    const BilinearOps H = h_operators(h, frame);
    const Mat F2 = F * F;
    return vv_from(n, [&](int i, int j) -> Vec {
        const Vec x = unit(n, i), y = unit(n, j);
        const Vec Fx = F * x, Fy = F * y;
        return H.apply(Fx, Fy) - H.apply(Fy, Fx) + F2 * (H.apply(x, y) - H.apply(y, x)) +
               F * (H.apply(y, Fx) - H.apply(Fx, y) + H.apply(Fy, x) - H.apply(x, Fy));
    });
}

namespace {

void finish_forms(const DecoratedStructure& ds, const Tensor3& h, AcmsForms& f) {
    const int n = ds.frame.dim();
    const int m = ds.half_dim;
    const Mat& B = ds.adapted;
    f.dEta = f.nablaEta - f.nablaEta.transpose();
    f.dPhi = cyclic_sum(f.nablaPhi);
    f.deltaPhi = Vec::Zero(n);
    for (int a = 0; a < n; ++a) {
        const Vec e = B.col(a);
        for (int k = 0; k < n; ++k) f.deltaPhi(k) -= eval3(f.nablaPhi, e, e, unit(n, k));
    }
    f.deltaEta = 0.0;
    for (int a = 0; a < 2 * m; ++a) {
        const Vec e = B.col(a);
        f.deltaEta -= e.dot(f.nablaEta.transpose() * e);
    }
    f.beta = Vec::Zero(n);
    f.betaBar = Vec::Zero(n);
    for (int a = 0; a < m; ++a) {
        const Vec E = B.col(a), FE = B.col(m + a);
        for (int k = 0; k < n; ++k) {
            const Vec u = unit(n, k);
            f.beta(k) += eval3(h, E, E, u) + eval3(h, FE, FE, u);
            f.betaBar(k) += eval3(h, E, FE, u) - eval3(h, FE, E, u);
        }
    }
}

}  // namespace

AcmsForms acms_forms(const DecoratedStructure& ds, const ConnectionCoeffs& nabla) {
    contact_of(ds);
    const int n = ds.frame.dim();
    const Mat& G = ds.frame.gram();
    const Mat& F = ds.tensor;
    AcmsForms f;
    f.Phi = G * F;
    f.nablaPhi = Tensor3(n);
    f.nablaEta = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        const Mat K = G * (nabla.op(i) * F - F * nabla.op(i));
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) f.nablaPhi(i, j, k) = K(j, k);
        f.nablaEta.row(i) = (G * nabla.op(i) * ds.xi).transpose();
    }
    finish_forms(ds, second_fundamental(ds, nabla), f);
    return f;
}

AcmsForms acms_forms_from_h(const DecoratedStructure& ds, const Tensor3& h) {
    contact_of(ds);
    const int n = ds.frame.dim();
    const Mat& G = ds.frame.gram();
    const Mat& F = ds.tensor;
    const BilinearOps H = h_operators(h, ds.frame);
    AcmsForms f;
    f.Phi = G * F;
    f.nablaPhi = Tensor3(n);
    f.nablaEta = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        const Mat K = G * (H.op(i) * F - F * H.op(i));
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) f.nablaPhi(i, j, k) = K(j, k);
        for (int j = 0; j < n; ++j) f.nablaEta(i, j) = eval3(h, unit(n, i), ds.xi, unit(n, j));
    }
    finish_forms(ds, h, f);
    return f;
}

Tensor3 reconstruct_h(const DecoratedStructure& ds, const Tensor3& a) {
    contact_of(ds);
    const int n = ds.frame.dim();
    const Mat& F = ds.tensor;
    Tensor3 h(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Vec x = unit(n, i), y = unit(n, j);
                h(i, j, k) = 0.5 * ds.eta(j) * eval3(a, x, ds.xi, F.col(k)) - ds.eta(k) * eval3(a, x, ds.xi, F.col(j)) +
                             0.5 * eval3(a, x, y, F.col(k));
            }
    return h;
}

double AcmsIdentities::max() const { return std::max({delta_eta, delta_phi_v, delta_phi_xi, reconstruction}); }

AcmsIdentities acms_identities(const DecoratedStructure& ds, const Tensor3& h, const AcmsForms& f) {
    contact_of(ds);
    const Mat& F = ds.tensor;
    AcmsIdentities r;
    r.delta_eta = std::abs(f.deltaEta - f.beta.dot(ds.xi));
    for (Eigen::Index c = 0; c < ds.V_basis.cols(); ++c) {
        const Vec x = ds.V_basis.col(c);
        const double lhs = f.deltaPhi.dot(x);
        const double rhs = 2.0 * f.beta.dot(F * x) + eval3(h, ds.xi, ds.xi, F * x);
        r.delta_phi_v = std::max(r.delta_phi_v, std::abs(lhs - rhs));
    }
    r.delta_phi_xi = std::abs(f.deltaPhi.dot(ds.xi) - f.betaBar.dot(ds.xi));
    r.reconstruction = (reconstruct_h(ds, f.nablaPhi) - h).max_abs();
    return r;
}

RicciLike ricci_like_invariants(const Tensor3& h, const FrameMetric& frame) {
    const int n = h.dim();
    const Mat& G = frame.gram();
    const Mat& Q = frame.onb();
    auto bilinear = [&](const Tensor3& t) {
        const BilinearOps H = h_operators(t, frame);
        Mat b = Mat::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            Mat W(n, n);
            for (int i = 0; i < n; ++i) W.col(i) = H.op(i) * Q.col(k);
            b += W.transpose() * G * W;
        }
        return b;
    };
    const Mat b1 = bilinear(h);
    const Mat b2 = bilinear(split_sym_skew(h).first);
    RicciLike r;
    r.r1 = frame.gram_inv() * b1;
    r.r2 = frame.gram_inv() * b2;
    const Mat hat = Q.transpose() * b1 * Q;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hat + hat.transpose()));
    const Vec& ev = es.eigenvalues();
    const double thresh = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> ker, im;
    for (Eigen::Index i = 0; i < ev.size(); ++i) (ev(i) <= thresh ? ker : im).push_back(i);
    r.ker_r1_basis = Mat(n, static_cast<Eigen::Index>(ker.size()));
    r.im_r1_basis = Mat(n, static_cast<Eigen::Index>(im.size()));
    for (size_t c = 0; c < ker.size(); ++c) r.ker_r1_basis.col(static_cast<Eigen::Index>(c)) = Q * es.eigenvectors().col(ker[c]);
    for (size_t c = 0; c < im.size(); ++c) r.im_r1_basis.col(static_cast<Eigen::Index>(c)) = Q * es.eigenvectors().col(im[c]);
    r.min_eigenvalue = ev.size() ? ev(0) : 0.0;
    return r;
}

Mat induced_ricci(const Curvature& R, const Curvature& Rbar, const FrameMetric& frame) {
    const int n = R.n;
    const Mat& Q = frame.onb();
    const Mat& G = frame.gram();
    Mat ri = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            Mat D = Mat::Zero(n, n);
            for (int b = 0; b < n; ++b) D += Q(b, k) * (Rbar.at(i, b) - R.at(i, b));
            const Vec Ek = Q.col(k);
            ri.row(i) += (Ek.transpose() * G * D);
        }
    return ri;
}

QuasiHomogeneity quasi_homogeneity(const Tensor3& h, const ConnectionCoeffs& nabla_bar, const FrameMetric& frame) {
    QuasiHomogeneity q;
    q.residual = covariant_derivative(nabla_bar, h).max_abs();
    const RicciLike r = ricci_like_invariants(h, frame);
    for (const Mat& d : covariant_derivative(nabla_bar, r.r1)) q.r1_residual = std::max(q.r1_residual, max_abs(d));
    for (const Mat& d : covariant_derivative(nabla_bar, r.r2)) q.r2_residual = std::max(q.r2_residual, max_abs(d));
    return q;
}

PolarDecomposition polar_decompose(const Endo& F, const FrameMetric& frame) {
    require_dim(F, frame.dim(), "polar_decompose");
    const Mat hat = frame.onb_inv() * F * frame.onb();
    Eigen::JacobiSVD<Mat> svd(hat);
    const Vec& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0)))
        throw Error(Errc::SingularAffinor, "polar decomposition requires a nonsingular affinor");
    PolarDecomposition pd;
    pd.P = psd_sqrt(metric_adjoint(F, frame) * F, frame);
    pd.S = F * pd.P.inverse();
    return pd;
}

GeodesicEvolution evolve_along_geodesic(const Endo& P0, const Endo& P0prime, double t) {
    const Eigen::Index n = P0.rows();
    if (P0.cols() != n || P0prime.rows() != n || P0prime.cols() != n)
        throw Error(Errc::InputShape, "evolve_along_geodesic: square matrices of equal size required");
    GeodesicEvolution out;
    out.compatibility_residual = max_abs(P0 * P0prime + P0prime * P0);
    const Mat A = t * P0prime;
    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    double scaled = norm;
    while (scaled > 0.5) {
        scaled *= 0.5;
        ++squarings;
    }
    const Mat B = A / std::ldexp(1.0, squarings);
    const Mat I = Mat::Identity(n, n);
    Mat C = I, S = Mat::Zero(n, n), term = I;
    double last = 1.0;
    int k = 0;
    for (k = 1; k <= 60; ++k) {
        term = term * B / static_cast<double>(k);
        if (k % 2 == 1) S += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        else C += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        last = term.cwiseAbs().maxCoeff();
        if (last < 1e-18) break;
    }
    for (int s = 0; s < squarings; ++s) {
        const Mat C2 = 2.0 * C * C - I;
        S = 2.0 * S * C;
        C = C2;
    }
    out.truncation_estimate = last * std::ldexp(1.0, 2 * squarings);
    out.converged = out.truncation_estimate <= 1e-9;
    out.P = C * P0 + S;
    return out;
}

Tensor3 mu_tensor_from_h(const DecoratedStructure& ds, const Tensor3& h) {
    require_hermitian(ds);
    const int m = ds.half_dim;
    if (m < 2) throw Error(Errc::DegenerateDimension, "mu tensor needs real dimension at least 4");
    const int n = ds.frame.dim();
    const Mat& G = ds.frame.gram();
    const Mat& J = ds.tensor;
    const Covector beta = contract_c12(h, ds.frame);
    const Covector dphi = -2.0 * J.transpose() * beta;
    const Covector dphiJ = J.transpose() * dphi;
    const Mat GJ = G * J;
    const double c = 1.0 / (2.0 * (m - 1));
    Tensor3 mu(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int a = 0; a < n; ++a) s += h(i, j, a) * J(a, k);
                mu(i, j, k) = 2.0 * s + c * (G(i, j) * dphi(k) - G(i, k) * dphi(j) - GJ(i, j) * dphiJ(k) + GJ(i, k) * dphiJ(j));
            }
    return mu;
}

Tensor3 mu_tensor(const DecoratedStructure& ds, const ConnectionCoeffs& nabla) {
    return mu_tensor_from_h(ds, second_fundamental(ds, nabla));
}

Tensor3 hermitian_conformal_correction(const DecoratedStructure& ds, const Covector& drho) {
    require_hermitian(ds);
    const int n = ds.frame.dim();
    const Mat& G = ds.frame.gram();
    const Mat& J = ds.tensor;
    const Covector dJ = J.transpose() * drho;
    const Mat GJ = G * J;
    const Mat JtG = J.transpose() * G;
    Tensor3 c(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                c(i, j, k) = 0.5 * (drho(j) * G(i, k) - G(i, j) * drho(k) + dJ(j) * JtG(i, k) + GJ(i, j) * dJ(k));
    return c;
}

ConnectionCoeffs conformal_perturb(const ConnectionCoeffs& nabla, const Covector& drho, const FrameMetric& frame) {
    const int n = frame.dim();
    if (drho.size() != n) throw Error(Errc::InputShape, "drho dimension mismatch");
    const Vec grad = frame.raise(drho);
    ConnectionCoeffs out = nabla;
    for (int i = 0; i < n; ++i)
        out.op(i) += drho(i) * Mat::Identity(n, n) + unit(n, i) * drho.transpose() - grad * frame.gram().row(i);
    return out;
}

StructureTensor induce_from_affinor(const SigmaAffinor& s, const FrameMetric& frame) {
    const int n = frame.dim();
    require_dim(s.S, n, "induce_from_affinor");
    if (isometry_residual(s.S, frame) > kValidateTol)
        throw Error(Errc::StructureInvalid, "S is not an isometry", StructureCheck::Isometry);
    const Mat& Q = frame.onb();
    const Mat& Qi = frame.onb_inv();
    const Mat hat = Qi * s.S * Q;
    const Mat I = Mat::Identity(n, n);
    Eigen::EigenSolver<Mat> es(hat, false);
    std::vector<double> reals;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const std::complex<double> l = es.eigenvalues()(i);
        if (l.imag() > 1e-8) {
            bool seen = false;
            for (double a : reals) seen = seen || std::abs(a - l.real()) < 1e-8;
            if (!seen) reals.push_back(l.real());
        }
    }
    const Mat k1 = nullspace(hat - I, 1e-9);
    const Mat km = nullspace(hat + I, 1e-9);
    if (reals.empty()) return AlmostProduct{s.S};

    Mat Fhat = Mat::Zero(n, n);
    for (double a : reals) {
        const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
        const Mat D = nullspace(hat * hat - 2.0 * a * hat + I, 1e-9);
        Fhat += (hat - a * I) * (D * D.transpose()) / b;
    }
    const Mat F = Q * Fhat * Qi;
    const Eigen::Index r0 = k1.cols() + km.cols();
    if (r0 == 0) return AlmostHermitian{F};
    if (r0 == 1) {
        const Vec xi = Q * (k1.cols() ? k1.col(0) : km.col(0));
        return make_almost_contact(F, xi, frame);
    }
    if (k1.cols() >= 2)
        throw Error(Errc::UnsupportedSpectrum, "eigenvalue 1 of multiplicity >= 2 together with complex spectrum");
    return FStructure{F};
}

NTensors n_tensors_direct(const DecoratedStructure& ds, const FrameModel& model) {
    contact_of(ds);
    const int n = model.dim();
    const Mat& F = ds.tensor;
    NTensors out;
    const Tensor3 NF = nijenhuis(F, model);
    out.N1 = vv_from(n, [&](int i, int j) -> Vec {
        Vec v(n);
        for (int k = 0; k < n; ++k) v(k) = NF(i, j, k);
        return v - ds.eta.dot(model.ad.op(i).col(j)) * ds.xi;
    });
    out.N2 = Mat(n, n);
    out.N3 = Mat(n, n);
    out.N4 = Vec(n);
    for (int i = 0; i < n; ++i) {
        const Vec x = unit(n, i);
        for (int j = 0; j < n; ++j) {
            const Vec y = unit(n, j);
            out.N2(i, j) = -ds.eta.dot(model.bracket(F * x, y)) + ds.eta.dot(model.bracket(F * y, x));
        }
        out.N3.col(i) = model.bracket(ds.xi, F * x) - F * model.bracket(ds.xi, x);
        out.N4(i) = -ds.eta.dot(model.bracket(ds.xi, x));
    }
    return out;
}

NTensors n_tensors_from_h(const DecoratedStructure& ds, const Tensor3& h) {
    contact_of(ds);
    const int n = h.dim();
    const Mat& F = ds.tensor;
    const Vec& xi = ds.xi;
    const BilinearOps H = h_operators(h, ds.frame);
    const Tensor3 NF = nijenhuis_contact(F, h, ds.frame);
    NTensors out;
    out.N1 = vv_from(n, [&](int i, int j) -> Vec {
        const Vec x = unit(n, i), y = unit(n, j);
        Vec v(n);
        for (int k = 0; k < n; ++k) v(k) = NF(i, j, k);
        return v + (eval3(h, y, x, xi) - eval3(h, x, y, xi)) * xi;
    });
    out.N2 = Mat(n, n);
    out.N3 = Mat(n, n);
    out.N4 = Vec(n);
    auto hminus_xi = [&](const Vec& x) -> Vec { return 0.5 * (H.apply(xi, x) - H.apply(x, xi)); };
    for (int i = 0; i < n; ++i) {
        const Vec x = unit(n, i);
        for (int j = 0; j < n; ++j) {
            const Vec y = unit(n, j);
            out.N2(i, j) = eval3(h, y, F * x, xi) - eval3(h, F * x, y, xi) - eval3(h, x, F * y, xi) + eval3(h, F * y, x, xi);
        }
        out.N3.col(i) = 2.0 * (hminus_xi(F * x) - F * hminus_xi(x));
        out.N4(i) = -eval3(h, xi, x, xi);
    }
    return out;
}

double n_tensor_difference(const NTensors& a, const NTensors& b) {
    return std::max({(a.N1 - b.N1).max_abs(), max_abs(a.N2 - b.N2), max_abs(a.N3 - b.N3), max_abs(a.N4 - b.N4)});
}

double n_tensor_norm(const NTensors& a) {
    return std::max({a.N1.max_abs(), max_abs(a.N2), max_abs(a.N3), max_abs(a.N4)});
}

double structure_parallel_residual(const DecoratedStructure& ds, const ConnectionCoeffs& nabla_bar) {
    double m = 0.0;
    for (const Mat& d : covariant_derivative(nabla_bar, ds.tensor)) m = std::max(m, max_abs(d));
    if (ds.kind == StructureKind::AlmostContact)
        m = std::max(m, max_abs(covariant_derivative_vector(nabla_bar, ds.xi)));
    return m;
}

double family_symmetry_residual(const DecoratedStructure& ds, const Tensor3& h) {
    double m = skew_residual(h);
    const int n = h.dim();
    if (ds.kind == StructureKind::AlmostHermitian || ds.kind == StructureKind::FStructure ||
        ds.kind == StructureKind::AlmostContact) {
        const Mat& T = ds.tensor;
        const Mat& P2 = ds.pi2;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const Vec x = unit(n, i);
                    const double r = eval3(h, x, P2.col(j), P2.col(k)) + eval3(h, x, T.col(j), T.col(k));
                    m = std::max(m, std::abs(r));
                }
    }
    return m;
}

Tensor3 to_adapted(const DecoratedStructure& ds, const Tensor3& h) { return pullback(h, ds.adapted); }

}  // namespace sg
