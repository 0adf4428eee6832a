#include "strucgeo/classifier.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <functional>
#include <initializer_list>
#include <mutex>
#include <sstream>

namespace sg {

namespace {

using Condition = std::function<Vec(const Tensor3&)>;

Vec concat(std::initializer_list<Vec> parts) {
    Eigen::Index total = 0;
    for (const Vec& p : parts) total += p.size();
    Vec out(total);
    Eigen::Index at = 0;
    for (const Vec& p : parts) {
        out.segment(at, p.size()) = p;
        at += p.size();
    }
    return out;
}

Vec scalar(double x) { return Vec::Constant(1, x); }

Vec flat(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

/// t(.., a, ..) = sum_i h(.., i, ..) M(i, a) in the given slot.
Tensor3 pull_slot(const Tensor3& h, const Mat& M, int slot) {
    const int n = h.dim();
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double v = h(i, j, k);
                if (v == 0.0) continue;
                for (int a = 0; a < n; ++a) {
                    if (slot == 0) t(a, j, k) += v * M(i, a);
                    else if (slot == 1) t(i, a, k) += v * M(j, a);
                    else t(i, j, a) += v * M(k, a);
                }
            }
    return t;
}

Tensor3 swap12(const Tensor3& h) {
    const int n = h.dim();
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) t(i, j, k) = h(j, i, k);
    return t;
}

Tensor3 swap23(const Tensor3& h) {
    const int n = h.dim();
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) t(i, j, k) = h(i, k, j);
    return t;
}

/// F e_k = e_{m+k}, F e_{m+k} = -e_k on the first 2m vectors, zero elsewhere.
Mat canonical_complex(int m, int N) {
    Mat F = Mat::Zero(N, N);
    for (int k = 0; k < m; ++k) {
        F(m + k, k) = 1.0;
        F(k, m + k) = -1.0;
    }
    return F;
}

/// beta(k) = sum over the first 2m indices of h(i, i, k).
Vec trace12(const Tensor3& h, int m) {
    const int N = h.dim();
    Vec b = Vec::Zero(N);
    for (int i = 0; i < 2 * m; ++i)
        for (int k = 0; k < N; ++k) b(k) += h(i, i, k);
    return b;
}

/// t(i,j,k) = A(i,j) b(k) or A(i,k) b(j) accumulated with a sign.
void add_outer(Tensor3& t, const Mat& A, const Vec& b, bool third, double s) {
    const int N = t.dim();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) t(i, j, k) += s * (third ? A(i, j) * b(k) : A(i, k) * b(j));
}

/// The four almost Hermitian conditions on the first 2m coordinates with complex structure J.
std::vector<Condition> hermitian_conditions(int m, int N) {
    const Mat J = canonical_complex(m, N);
    Mat G = Mat::Zero(N, N);
    G.topLeftCorner(2 * m, 2 * m).setIdentity();
    const Mat GJ = G * J;
    std::vector<Condition> c;
    c.emplace_back([](const Tensor3& h) { return (h + swap12(h)).flat(); });
    c.emplace_back([J](const Tensor3& h) { return cyclic_sum(h).flat(); });
    c.emplace_back([J, m](const Tensor3& h) {
        return concat({(h - pull_slot(pull_slot(h, J, 0), J, 1)).flat(), trace12(h, m)});
    });
    c.emplace_back([J, G, GJ, m](const Tensor3& h) {
        const Vec b = trace12(h, m);
        const Vec bJ = J.transpose() * b;
        Tensor3 f(h.dim());
        add_outer(f, G, b, true, 1.0);
        add_outer(f, G, b, false, -1.0);
        add_outer(f, GJ, bJ, true, -1.0);
        add_outer(f, GJ, bJ, false, 1.0);
        f *= 1.0 / (2.0 * (m - 1));
        return (h - f).flat();
    });
    return c;
}

/// Block code of an index triple: bit 2 for slot 1 on xi, bit 1 for slot 2, bit 0 for slot 3.
int block_code(int i, int j, int k, int x) { return (i == x) * 4 + (j == x) * 2 + (k == x); }

/// Components outside the listed blocks.
Vec outside_blocks(const Tensor3& h, int x, std::initializer_list<int> keep) {
    const int N = h.dim();
    std::vector<double> out;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const int b = block_code(i, j, k, x);
                bool kept = false;
                for (int q : keep) kept = kept || q == b;
                if (!kept) out.push_back(h(i, j, k));
            }
    return Eigen::Map<Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

constexpr int kVVV = 0, kVVx = 1, kVxV = 2, kxVV = 4, kxVx = 5, kxxV = 6;

Mat solve_in(const Mat& ambient, const Condition& c, int N) {
    const Mat C = linear_map_matrix(c, N);
    return ambient * nullspace(C * ambient);
}

[[noreturn]] void tripwire(const std::string& what) { throw Error(Errc::TaxonomyConstructionError, what); }

int choose3(int n) { return n < 3 ? 0 : n * (n - 1) * (n - 2) / 6; }

std::vector<int> hermitian_dims(int m) {
    if (m < 2) return {0, 0, 0, 0};
    return {m * (m - 1) * (m - 2) / 3, 2 * m * (m - 1) * (m + 1) / 3, m * (m + 1) * (m - 2), 2 * m};
}

Tensor3 from_flat(const Vec& v, int N) { return Tensor3::from_flat(v, N); }

}  // namespace

const char* taxonomy_name(TaxonomyId id) {
    switch (id) {
        case TaxonomyId::ON3: return "ON3";
        case TaxonomyId::GH4: return "GH4";
        case TaxonomyId::ACMS12: return "ACMS12";
        case TaxonomyId::ACMS12C: return "ACMS12C";
    }
    return "?";
}

std::optional<TaxonomyId> parse_taxonomy_id(const std::string& s) {
    for (TaxonomyId id : {TaxonomyId::ON3, TaxonomyId::GH4, TaxonomyId::ACMS12, TaxonomyId::ACMS12C})
        if (s == taxonomy_name(id)) return id;
    return std::nullopt;
}

const Subspace& Taxonomy::component(int index) const {
    for (const Subspace& s : subspaces)
        if (s.index == index) return s;
    throw Error(Errc::InvalidParams, "taxonomy has no component " + std::to_string(index));
}

Tensor3 Taxonomy::project(const Tensor3& h, int index) const {
    const Mat& B = component(index).basis;
    return from_flat(B * (B.transpose() * h.flat()), space_dim);
}

std::vector<int> expected_dims(TaxonomyId id, int n) {
    switch (id) {
        case TaxonomyId::ON3: {
            const int t3 = choose3(n);
            return {n, n * n * (n - 1) / 2 - n - t3, t3};
        }
        case TaxonomyId::GH4: return hermitian_dims(n);
        case TaxonomyId::ACMS12: {
            std::vector<int> d = hermitian_dims(n);
            for (int v : {n * n - 1, n * n - n, 1, n * n - 1, n * n + n, 1, 2 * n, n * n - n}) d.push_back(v);
            return d;
        }
        case TaxonomyId::ACMS12C: {
            std::vector<int> d = hermitian_dims(n);
            for (int v : {1, 1, n * n - 1, n * n - 1, n * (n + 1), n * (n - 1), n * (n - 1), 2 * n}) d.push_back(v);
            return d;
        }
    }
    return {};
}

int expected_ambient_dim(TaxonomyId id, int n) {
    switch (id) {
        case TaxonomyId::ON3: return n * n * (n - 1) / 2;
        case TaxonomyId::GH4: return 2 * n * (n * n - n);
        case TaxonomyId::ACMS12:
        case TaxonomyId::ACMS12C: return (2 * n + 1) * n * (n + 1);
    }
    return 0;
}

Taxonomy build_taxonomy(TaxonomyId id, int n) {
    const int min_n = id == TaxonomyId::ON3 ? 2 : 1;
    if (n < min_n) throw Error(Errc::InvalidParams, std::string(taxonomy_name(id)) + " needs n >= " + std::to_string(min_n));
    Taxonomy tax;
    tax.id = id;
    tax.n = n;
    const int m = n;
    const int N = id == TaxonomyId::ON3 ? n : (id == TaxonomyId::GH4 ? 2 * m : 2 * m + 1);
    tax.space_dim = N;
    const int x = 2 * m;
    const Mat F = id == TaxonomyId::ON3 ? Mat::Zero(N, N) : canonical_complex(m, N);

    Condition ambient;
    std::vector<Condition> comps;
    std::vector<bool> forced_zero;

    switch (id) {
        case TaxonomyId::ON3: {
            ambient = [](const Tensor3& h) { return (h + swap23(h)).flat(); };
            comps.emplace_back([n](const Tensor3& h) {
                const Vec b = contract_c12(h, FrameMetric::identity(n)) / static_cast<double>(n - 1);
                Tensor3 f(n);
                const Mat I = Mat::Identity(n, n);
                add_outer(f, I, b, true, 1.0);
                add_outer(f, I, b, false, -1.0);
                return (h - f).flat();
            });
            comps.emplace_back([n](const Tensor3& h) {
                return concat({cyclic_sum(h).flat(), contract_c12(h, FrameMetric::identity(n))});
            });
            comps.emplace_back([](const Tensor3& h) { return (h + swap12(h)).flat(); });
            forced_zero.assign(3, false);
            break;
        }
        case TaxonomyId::GH4: {
            ambient = [F](const Tensor3& h) {
                return concat({(h + swap23(h)).flat(), (h + pull_slot(pull_slot(h, F, 1), F, 2)).flat()});
            };
            comps = hermitian_conditions(m, N);
            forced_zero.assign(4, m < 2);
            break;
        }
        case TaxonomyId::ACMS12: {
            ambient = [F, x, m](const Tensor3& h) {
                const Tensor3 g = h + pull_slot(pull_slot(h, F, 1), F, 2);
                std::vector<double> vv;
                for (int i = 0; i <= x; ++i)
                    for (int j = 0; j < 2 * m; ++j)
                        for (int k = 0; k < 2 * m; ++k) vv.push_back(g(i, j, k));
                return concat({(h + swap23(h)).flat(), Eigen::Map<Vec>(vv.data(), static_cast<Eigen::Index>(vv.size()))});
            };
            for (Condition& c : hermitian_conditions(m, N))
                comps.emplace_back([c, x](const Tensor3& h) { return concat({c(h), outside_blocks(h, x, {kVVV})}); });
            auto b_of = [x, m](const Tensor3& h) {
                Mat b(2 * m, 2 * m);
                for (int i = 0; i < 2 * m; ++i)
                    for (int j = 0; j < 2 * m; ++j) b(i, j) = h(i, j, x);
                return b;
            };
            const Mat Fv = F.topLeftCorner(2 * m, 2 * m);
            auto bbar = [m](const Mat& b) {
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += b(i, m + i) - b(m + i, i);
                return s;
            };
            auto only_vvx = [x](const Tensor3& h) { return outside_blocks(h, x, {kVVx, kVxV}); };
            auto fb = [Fv](const Mat& b) { return Mat(Fv.transpose() * b * Fv); };
            const double inv2m = 1.0 / (2.0 * m);
            const Mat Iv = Mat::Identity(2 * m, 2 * m);
            comps.emplace_back([=](const Tensor3& h) {
                const Mat b = b_of(h);
                return concat({only_vvx(h), flat(b + b.transpose()), flat(fb(b) - b), scalar(bbar(b))});
            });
            comps.emplace_back([=](const Tensor3& h) {
                const Mat b = b_of(h);
                return concat({only_vvx(h), flat(b + b.transpose()), flat(fb(b) + b)});
            });
            comps.emplace_back([=](const Tensor3& h) {
                const Mat b = b_of(h);
                return concat({only_vvx(h), flat(b - Fv.transpose() * (bbar(b) * inv2m))});
            });
            comps.emplace_back([=](const Tensor3& h) {
                const Mat b = b_of(h);
                return concat({only_vvx(h), flat(b - b.transpose()), flat(fb(b) - b), scalar(b.trace())});
            });
            comps.emplace_back([=](const Tensor3& h) {
                const Mat b = b_of(h);
                return concat({only_vvx(h), flat(b - b.transpose()), flat(fb(b) + b)});
            });
            comps.emplace_back([=](const Tensor3& h) {
                const Mat b = b_of(h);
                return concat({only_vvx(h), flat(b - Iv * (b.trace() * inv2m))});
            });
            comps.emplace_back([x](const Tensor3& h) { return outside_blocks(h, x, {kxVx, kxxV}); });
            comps.emplace_back([x](const Tensor3& h) { return outside_blocks(h, x, {kxVV}); });
            forced_zero.assign(12, false);
            for (int i = 0; i < 4; ++i) forced_zero[static_cast<size_t>(i)] = m < 2;
            break;
        }
        case TaxonomyId::ACMS12C: {
            Vec eta = Vec::Zero(N);
            eta(x) = 1.0;
            const Mat I = Mat::Identity(N, N);
            const Mat Phi = F;
            const Mat FF = F.transpose() * F;
            ambient = [=](const Tensor3& a) {
                Tensor3 g = a + pull_slot(pull_slot(a, F, 1), F, 2);
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j)
                        for (int k = 0; k < N; ++k) g(i, j, k) -= eta(j) * a(i, x, k) + eta(k) * a(i, j, x);
                return concat({(a + swap23(a)).flat(), g.flat()});
            };
            auto neta = [=](const Tensor3& a) {
                Mat ne = Mat::Zero(N, N);
                for (int i = 0; i < N; ++i)
                    for (int w = 0; w < N; ++w)
                        for (int c = 0; c < N; ++c) ne(i, w) += a(i, x, c) * F(c, w);
                return ne;
            };
            auto dphi = [=](const Tensor3& a) {
                Vec d = Vec::Zero(N);
                for (int i = 0; i < N; ++i)
                    for (int k = 0; k < N; ++k) d(k) -= a(i, i, k);
                return d;
            };
            auto deta = [=](const Tensor3& a) { return -neta(a).trace(); };
            auto t12 = [=](const Tensor3& a, double s1, double s2) {
                const Mat ne = neta(a);
                const Mat A1 = ne * F;                // A1(j,i) = (nabla_{e_j} eta)(F e_i)
                const Mat A2 = F.transpose() * ne;    // A2(i,k) = (nabla_{F e_i} eta)(e_k)
                Tensor3 t(N);
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j)
                        for (int k = 0; k < N; ++k) t(i, j, k) = s1 * eta(k) * A1(j, i) + s2 * eta(j) * A2(i, k);
                return t;
            };
            comps.emplace_back([=](const Tensor3& a) { return concat({(a + swap12(a)).flat(), flat(neta(a))}); });
            comps.emplace_back([=](const Tensor3& a) { return concat({cyclic_sum(a).flat(), flat(neta(a))}); });
            comps.emplace_back([=](const Tensor3& a) {
                return concat({(a - pull_slot(pull_slot(a, F, 0), F, 1)).flat(), dphi(a)});
            });
            comps.emplace_back([=](const Tensor3& a) {
                const Vec d = dphi(a);
                const Vec dF = F.transpose() * d;
                Tensor3 f(N);
                add_outer(f, FF, d, true, -1.0);
                add_outer(f, FF, d, false, 1.0);
                add_outer(f, Phi, dF, true, 1.0);
                add_outer(f, Phi, dF, false, -1.0);
                f *= 1.0 / (2.0 * (m - 1));
                return concat({(a - f).flat(), scalar(d(x))});
            });
            comps.emplace_back([=](const Tensor3& a) {
                Tensor3 f(N);
                add_outer(f, Phi, eta, false, 1.0);
                add_outer(f, Phi, eta, true, -1.0);
                f *= deta(a) / (2.0 * m);
                return (a - f).flat();
            });
            comps.emplace_back([=](const Tensor3& a) {
                Tensor3 f(N);
                add_outer(f, I, eta, false, 1.0);
                add_outer(f, I, eta, true, -1.0);
                f *= dphi(a)(x) / (2.0 * m);
                return (a - f).flat();
            });
            comps.emplace_back([=](const Tensor3& a) { return concat({(a - t12(a, 1, 1)).flat(), dphi(a)}); });
            comps.emplace_back([=](const Tensor3& a) { return concat({(a - t12(a, -1, 1)).flat(), scalar(deta(a))}); });
            comps.emplace_back([=](const Tensor3& a) { return (a - t12(a, 1, -1)).flat(); });
            comps.emplace_back([=](const Tensor3& a) { return (a - t12(a, -1, -1)).flat(); });
            comps.emplace_back([=](const Tensor3& a) {
                Mat ax(N, N);
                for (int b = 0; b < N; ++b)
                    for (int c = 0; c < N; ++c) ax(b, c) = a(x, b, c);
                const Mat q = F.transpose() * ax * F;
                Tensor3 f(N);
                for (int j = 0; j < N; ++j)
                    for (int k = 0; k < N; ++k) f(x, j, k) = -q(j, k);
                return (a - f).flat();
            });
            comps.emplace_back([=](const Tensor3& a) {
                const Vec neF = F.transpose() * Vec(neta(a).row(x).transpose());
                Tensor3 f(N);
                for (int j = 0; j < N; ++j)
                    for (int k = 0; k < N; ++k) f(x, j, k) = eta(k) * neF(j) - eta(j) * neF(k);
                return (a - f).flat();
            });
            forced_zero.assign(12, false);
            for (int i = 0; i < 4; ++i) forced_zero[static_cast<size_t>(i)] = m < 2;
            break;
        }
    }

    tax.ambient = nullspace(linear_map_matrix(ambient, N));
    const int amb_expected = expected_ambient_dim(id, n);
    if (tax.ambient.cols() != amb_expected) {
        std::ostringstream os;
        os << taxonomy_name(id) << " n=" << n << ": ambient dimension " << tax.ambient.cols() << ", expected " << amb_expected;
        tripwire(os.str());
    }
    const std::vector<int> dims = expected_dims(id, n);
    const int NN = N * N * N;
    for (size_t c = 0; c < comps.size(); ++c) {
        Subspace s;
        s.index = static_cast<int>(c) + 1;
        s.expected_dim = dims[c];
        s.basis = forced_zero[c] ? Mat(NN, 0) : solve_in(tax.ambient, comps[c], N);
        if (s.basis.cols() != s.expected_dim) {
            std::ostringstream os;
            os << taxonomy_name(id) << " n=" << n << ": component " << s.index << " has dimension " << s.basis.cols()
               << ", expected " << s.expected_dim;
            tripwire(os.str());
        }
        tax.subspaces.push_back(std::move(s));
    }
    Eigen::Index total = 0;
    for (size_t a = 0; a < tax.subspaces.size(); ++a) {
        total += tax.subspaces[a].basis.cols();
        for (size_t b = a + 1; b < tax.subspaces.size(); ++b) {
            const Mat& A = tax.subspaces[a].basis;
            const Mat& B = tax.subspaces[b].basis;
            if (A.cols() == 0 || B.cols() == 0) continue;
            const double o = (A.transpose() * B).cwiseAbs().maxCoeff();
            if (o > 1e-10) {
                std::ostringstream os;
                os << taxonomy_name(id) << " n=" << n << ": components " << tax.subspaces[a].index << " and "
                   << tax.subspaces[b].index << " overlap by " << o;
                tripwire(os.str());
            }
        }
    }
    if (total != tax.ambient.cols()) {
        std::ostringstream os;
        os << taxonomy_name(id) << " n=" << n << ": components sum to " << total << ", ambient is " << tax.ambient.cols();
        tripwire(os.str());
    }
    return tax;
}

std::shared_ptr<const Taxonomy> shared_taxonomy(TaxonomyId id, int n) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const Taxonomy>> cache;
    const std::pair<int, int> key{static_cast<int>(id), n};
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const Taxonomy>(build_taxonomy(id, n));
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, built).first->second;
}

ClassReport classify(const Tensor3& h, const Taxonomy& tax, double tol_rel) {
    if (h.dim() != tax.space_dim)
        throw Error(Errc::InputShape, "tensor dimension does not match the taxonomy");
    ClassReport r;
    r.taxonomy = tax.id;
    r.tol_rel = tol_rel;
    const Vec v = h.flat();
    r.norm = v.norm();
    r.ambient_residual = (v - tax.ambient * (tax.ambient.transpose() * v)).norm();
    if (r.ambient_residual > 1e-8 * std::max(1.0, r.norm)) {
        std::ostringstream os;
        os << "tensor leaves the " << taxonomy_name(tax.id) << " ambient space (residual " << r.ambient_residual << ")";
        throw Error(Errc::AmbientViolation, os.str());
    }
    for (const Subspace& s : tax.subspaces) {
        const double c = s.basis.cols() ? (s.basis.transpose() * v).norm() : 0.0;
        r.component_norms[s.index] = c;
        if (r.norm > kZeroNorm && c > tol_rel * r.norm) r.membership.insert(s.index);
    }
    if (tax.id != TaxonomyId::ACMS12C) {
        const RicciLike rl = ricci_like_invariants(h, FrameMetric::identity(tax.space_dim));
        r.r1_min_eigenvalue = rl.min_eigenvalue;
        r.strict = rl.min_eigenvalue > kStrictTol;
    }
    r.named_labels = named_classes(r);
    return r;
}

TaxonomyId taxonomy_for(StructureKind kind) {
    switch (kind) {
        case StructureKind::AlmostHermitian: return TaxonomyId::GH4;
        case StructureKind::AlmostContact: return TaxonomyId::ACMS12;
        default: return TaxonomyId::ON3;
    }
}

int taxonomy_param(const DecoratedStructure& ds, TaxonomyId id) {
    switch (id) {
        case TaxonomyId::ON3: return ds.frame.dim();
        case TaxonomyId::GH4:
            if (ds.kind != StructureKind::AlmostHermitian)
                throw Error(Errc::InvalidParams, "GH4 needs an almost Hermitian structure");
            return ds.half_dim;
        case TaxonomyId::ACMS12:
        case TaxonomyId::ACMS12C:
            if (ds.kind != StructureKind::AlmostContact)
                throw Error(Errc::InvalidParams, "ACMS12 needs an almost contact metric structure");
            return ds.half_dim;
    }
    return 0;
}

Tensor3 canonical_components(const DecoratedStructure& ds, const Tensor3& h, TaxonomyId id) {
    taxonomy_param(ds, id);
    if (id == TaxonomyId::ON3) return pullback(h, ds.frame.onb());
    return to_adapted(ds, h);
}

ClassReport classify_structure(const DecoratedStructure& ds, const Tensor3& h, std::optional<TaxonomyId> id,
                               double tol_rel) {
    const TaxonomyId t = id.value_or(taxonomy_for(ds.kind));
    if (t == TaxonomyId::ACMS12C) throw Error(Errc::InvalidParams, "use classify_acms_phi for nabla Phi");
    const auto tax = shared_taxonomy(t, taxonomy_param(ds, t));
    return classify(canonical_components(ds, h, t), *tax, tol_rel);
}

ClassReport classify_acms_via_nabla_phi(const Tensor3& nablaPhi, int n, double tol_rel) {
    return classify(nablaPhi, *shared_taxonomy(TaxonomyId::ACMS12C, n), tol_rel);
}

ClassReport classify_acms_phi(const DecoratedStructure& ds, const AcmsForms& forms, double tol_rel) {
    const int n = taxonomy_param(ds, TaxonomyId::ACMS12C);
    return classify_acms_via_nabla_phi(pullback(forms.nablaPhi, ds.adapted), n, tol_rel);
}

int phi_to_h_index(int c) {
    static const int map[13] = {0, 1, 2, 3, 4, 10, 7, 5, 8, 9, 6, 12, 11};
    if (c < 1 || c > 12) throw Error(Errc::InvalidParams, "C class index out of range");
    return map[c];
}

int h_to_phi_index(int t) {
    for (int c = 1; c <= 12; ++c)
        if (phi_to_h_index(c) == t) return c;
    throw Error(Errc::InvalidParams, "h class index out of range");
}

bool cross_check_isomorphism(const ClassReport& report_h, const ClassReport& report_phi) {
    std::set<int> mapped;
    for (int c : report_phi.membership) mapped.insert(phi_to_h_index(c));
    return mapped == report_h.membership;
}

namespace {

struct NamedClass {
    const char* name;
    std::set<int> indices;
};

std::set<int> all_but(int count, std::initializer_list<int> skip) {
    std::set<int> s;
    for (int i = 1; i <= count; ++i) s.insert(i);
    for (int i : skip) s.erase(i);
    return s;
}

const std::vector<NamedClass>& named_table(TaxonomyId id) {
    static const std::vector<NamedClass> on3 = {
        {"nearly particular", {3}},
        {"T1+T2 (cyclic sum zero)", {1, 2}},
        {"T2+T3 (trace free)", {2, 3}},
        {"general", {1, 2, 3}},
    };
    static const std::vector<NamedClass> gh = {
        {"NK (nearly Kaehlerian)", {1}},
        {"AK (almost Kaehlerian)", {2}},
        {"SK and H (semi-Kaehlerian Hermitian)", {3}},
        {"QK (quasi-Kaehlerian)", {1, 2}},
        {"H (Hermitian)", {3, 4}},
        {"SK (semi-Kaehlerian)", {1, 2, 3}},
        {"G1", {1, 3, 4}},
        {"G2", {2, 3, 4}},
        {"U (almost Hermitian)", {1, 2, 3, 4}},
    };
    static const std::vector<NamedClass> acms = {
        {"nearly-K-cosymplectic", {1}},
        {"alpha-Sasakian", {7}},
        {"alpha-Kenmotsu", {10}},
        {"almost cosymplectic", {2, 9}},
        {"trans-Sasakian", {7, 10}},
        {"quasi-Sasakian", {5, 7}},
        {"semi-cosymplectic and normal", {3, 5, 8}},
        {"nearly-trans-Sasakian", {1, 7, 10}},
        {"quasi-K-cosymplectic", {1, 2, 6, 9}},
        {"normal", {3, 4, 5, 7, 8, 10}},
        {"integrable", {3, 4, 8, 10, 11}},
        {"V-parallel", {11, 12}},
        {"V-invariant type", {1, 2, 3, 4, 11, 12}},
        {"V-antiinvariant type", all_but(12, {1, 2, 3, 4})},
        {"xi-antiinvariant type", all_but(12, {12})},
        {"almost-K-contact", all_but(12, {11, 12})},
        {"semi-cosymplectic", all_but(12, {4, 7, 10, 11})},
        {"almost contact metric", all_but(12, {})},
    };
    switch (id) {
        case TaxonomyId::ON3: return on3;
        case TaxonomyId::GH4: return gh;
        default: return acms;
    }
}

}  // namespace

std::string class_label(TaxonomyId id, const std::set<int>& membership) {
    const char* prefix = id == TaxonomyId::ACMS12C ? "C" : "T";
    if (membership.empty()) return std::string(prefix) + "0";
    std::string s;
    for (int i : membership) {
        if (!s.empty()) s += "+";
        s += prefix + std::to_string(i);
    }
    return s;
}

std::vector<std::string> named_classes(const ClassReport& report) {
    if (report.membership.empty()) {
        switch (report.taxonomy) {
            case TaxonomyId::ON3: return {"particular"};
            case TaxonomyId::GH4: return {"Kaehlerian"};
            default: return {"cosymplectic"};
        }
    }
    std::set<int> key = report.membership;
    if (report.taxonomy == TaxonomyId::ACMS12C) {
        key.clear();
        for (int c : report.membership) key.insert(phi_to_h_index(c));
    }
    std::vector<std::string> out{class_label(report.taxonomy, report.membership)};
    for (const NamedClass& nc : named_table(report.taxonomy))
        if (std::includes(nc.indices.begin(), nc.indices.end(), key.begin(), key.end())) out.emplace_back(nc.name);
    return out;
}

std::map<std::string, double> SpecialFlags::as_map() const {
    std::map<std::string, double> m{
        {"cosymplectic", cosymplectic},
        {"integrable", integrable},
        {"normal", normal},
        {"nearly_k_cosymplectic", nearly_k_cosymplectic},
        {"almost_k_contact", almost_k_contact},
        {"almost_cosymplectic", almost_cosymplectic},
        {"quasi_sasakian", quasi_sasakian},
        {"semi_cosymplectic", semi_cosymplectic},
        {"v_invariant", v_invariant},
        {"v_antiinvariant", v_antiinvariant},
        {"xi_antiinvariant", xi_antiinvariant},
        {"v_parallel", v_parallel},
    };
    if (alpha_sasakian) m["alpha_sasakian"] = *alpha_sasakian;
    if (alpha_kenmotsu) m["alpha_kenmotsu"] = *alpha_kenmotsu;
    return m;
}

SpecialFlags recognize_special(const DecoratedStructure& ds, const Tensor3& h, const AcmsForms& forms,
                               const ClassReport& report) {
    if (report.taxonomy != TaxonomyId::ACMS12)
        throw Error(Errc::InvalidParams, "recognize_special needs an ACMS12 report");
    const int m = taxonomy_param(ds, TaxonomyId::ACMS12);
    const int N = 2 * m + 1, x = 2 * m;
    const Tensor3 hc = to_adapted(ds, h);
    const Mat F = canonical_complex(m, N);
    const Vec xi = Vec::Unit(N, x);
    const FrameMetric I = FrameMetric::identity(N);
    const DecoratedStructure cs = validate_structure(make_almost_contact(F, xi, I), I);
    const double thr = 10.0 * report.tol_rel * std::max(hc.frobenius(), kZeroNorm);

    // (nabla_{e_i} F) as matrices and nabla Phi, nabla eta in canonical coordinates.
    std::vector<Mat> dF(static_cast<size_t>(N));
    Tensor3 a(N);
    Mat neta(N, N);
    for (int i = 0; i < N; ++i) {
        Mat H(N, N);
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) H(k, j) = hc(i, j, k);
        dF[static_cast<size_t>(i)] = H * F - F * H;
        for (int j = 0; j < N; ++j) {
            neta(i, j) = hc(i, x, j);
            for (int k = 0; k < N; ++k) a(i, j, k) = dF[static_cast<size_t>(i)](j, k);
        }
    }
    auto max_over = [&](auto&& f) {
        double worst = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) worst = std::max(worst, f(i, j));
        return worst;
    };
    const Mat Pv = Mat::Identity(N, N) - xi * xi.transpose();
    auto in_v = [&](int i) { return i < x; };

    const double nabla_F = max_over([&](int i, int j) { return dF[static_cast<size_t>(i)].col(j).cwiseAbs().maxCoeff(); });
    const double nabla_xi = neta.cwiseAbs().maxCoeff();
    const double nij = nijenhuis_contact(F, hc, I).max_abs();
    const double n1 = n_tensors_from_h(cs, hc).N1.max_abs();
    const double dphi = cyclic_sum(a).max_abs();
    const double deta = (neta - neta.transpose()).cwiseAbs().maxCoeff();
    Vec delta_phi = Vec::Zero(N);
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) delta_phi(k) -= a(i, i, k);
    const double delta_eta = -neta.topLeftCorner(x, x).trace();
    const double nk = max_over([&](int i, int j) {
        return (dF[static_cast<size_t>(i)].col(j) + dF[static_cast<size_t>(j)].col(i)).cwiseAbs().maxCoeff();
    });
    const double xi_dir = dF[static_cast<size_t>(x)].cwiseAbs().maxCoeff();
    const double v_inv = max_over([&](int i, int j) {
        return in_v(i) && in_v(j) ? std::abs(dF[static_cast<size_t>(i)](x, j)) : 0.0;
    });
    const double v_anti = max_over([&](int i, int j) {
        return in_v(i) && in_v(j) ? (Pv * dF[static_cast<size_t>(i)].col(j)).cwiseAbs().maxCoeff() : 0.0;
    });
    const double xi_anti = max_over([&](int, int j) {
        return in_v(j) ? (Pv * dF[static_cast<size_t>(x)].col(j)).cwiseAbs().maxCoeff() : 0.0;
    });

    const double as = forms.deltaPhi.dot(ds.xi) / (2.0 * m);
    const double ak = -forms.deltaEta / (2.0 * m);
    const double sas = max_over([&](int i, int j) {
        const Vec want = as * ((i == j ? 1.0 : 0.0) * xi - (j == x ? 1.0 : 0.0) * Vec::Unit(N, i));
        return (dF[static_cast<size_t>(i)].col(j) - want).cwiseAbs().maxCoeff();
    });
    const double ken = max_over([&](int i, int j) {
        const Vec want = ak * (F(j, i) * xi - (j == x ? 1.0 : 0.0) * Vec(F.col(i)));
        return (dF[static_cast<size_t>(i)].col(j) - want).cwiseAbs().maxCoeff();
    });

    const std::set<int>& mem = report.membership;
    auto within = [&](const std::set<int>& s) { return std::includes(s.begin(), s.end(), mem.begin(), mem.end()); };
    auto check = [&](const char* name, bool by_class, bool by_tensor) {
        if (by_class != by_tensor)
            throw Error(Errc::InternalInconsistency, std::string("class and tensor routes disagree on ") + name);
        return by_class;
    };

    SpecialFlags f;
    f.cosymplectic = check("cosymplectic", mem.empty(), nabla_F <= thr && nabla_xi <= thr);
    f.integrable = check("integrable", within({3, 4, 8, 10, 11}), nij <= thr);
    f.normal = check("normal", within({3, 4, 5, 7, 8, 10}), n1 <= thr);
    f.nearly_k_cosymplectic = check("nearly_k_cosymplectic", within({1}), nk <= thr && nabla_xi <= thr);
    f.almost_k_contact = check("almost_k_contact", within(all_but(12, {11, 12})), xi_dir <= thr);
    f.almost_cosymplectic = check("almost_cosymplectic", within({2, 9}), dphi <= thr && deta <= thr);
    f.quasi_sasakian = check("quasi_sasakian", within({5, 7}), dphi <= thr && n1 <= thr);
    f.semi_cosymplectic = check("semi_cosymplectic", within(all_but(12, {4, 7, 10, 11})),
                                delta_phi.cwiseAbs().maxCoeff() <= thr && std::abs(delta_eta) <= thr);
    f.v_invariant = check("v_invariant", within({1, 2, 3, 4, 11, 12}), v_inv <= thr);
    f.v_antiinvariant = check("v_antiinvariant", within(all_but(12, {1, 2, 3, 4})), v_anti <= thr);
    f.xi_antiinvariant = check("xi_antiinvariant", within(all_but(12, {12})), xi_anti <= thr);
    f.v_parallel = check("v_parallel", within({11, 12}), v_inv <= thr && v_anti <= thr);
    if (check("alpha_sasakian", mem == std::set<int>{7}, sas <= thr && std::abs(as) > thr)) f.alpha_sasakian = as;
    if (check("alpha_kenmotsu", mem == std::set<int>{10}, ken <= thr && std::abs(ak) > thr)) f.alpha_kenmotsu = ak;
    return f;
}

std::vector<ClassReport> classify_batch_serial(const std::vector<Tensor3>& hs, const Taxonomy& tax, double tol_rel) {
    std::vector<ClassReport> out;
    out.reserve(hs.size());
    for (const Tensor3& h : hs) out.push_back(classify(h, tax, tol_rel));
    return out;
}

std::vector<ClassReport> classify_batch(const std::vector<Tensor3>& hs, const Taxonomy& tax, double tol_rel) {
    std::vector<ClassReport> out(hs.size());
    std::exception_ptr failure;
    const long count = static_cast<long>(hs.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < count; ++i) {
        try {
            out[static_cast<size_t>(i)] = classify(hs[static_cast<size_t>(i)], tax, tol_rel);
        } catch (...) {
#pragma omp critical(strucgeo_batch_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace sg
