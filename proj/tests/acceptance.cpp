// Acceptance criteria: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "strucgeo/catalog.hpp"
#include "strucgeo/classifier.hpp"
#include "strucgeo/qr_algebra.hpp"
#include "test_support.hpp"

using namespace sg;
using namespace sgtest;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (!pass) detail << "; ";
            else detail.str("");
            pass = false;
            detail << what;
        }
    }
};

std::string join(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string label(const std::set<int>& s) { return class_label(TaxonomyId::ACMS12, s); }

std::vector<int> built_dims(TaxonomyId id, int n) {
    std::vector<int> d;
    for (const Subspace& s : shared_taxonomy(id, n)->subspaces) d.push_back(static_cast<int>(s.basis.cols()));
    return d;
}

int sum(const std::vector<int>& v) {
    int s = 0;
    for (int x : v) s += x;
    return s;
}

Mat canonical_F(int m) {
    Mat F = Mat::Zero(2 * m + 1, 2 * m + 1);
    F.topLeftCorner(2 * m, 2 * m) = standard_complex(m);
    return F;
}

DecoratedStructure canonical_contact(int m) {
    const FrameMetric I = FrameMetric::identity(2 * m + 1);
    return validate_structure(make_almost_contact(canonical_F(m), Vec::Unit(2 * m + 1, 2 * m), I), I);
}

Mat random_unitary_real(int m) {
    Eigen::MatrixXcd z(m, m);
    z.real() = random_matrix(m, m);
    z.imag() = random_matrix(m, m);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    const Eigen::MatrixXcd u = qr.householderQ();
    Mat r(2 * m, 2 * m);
    r << u.real(), -u.imag(), u.imag(), u.real();
    return r;
}

/// Random element of the structure group of a taxonomy, in its canonical coordinates.
Mat random_group_element(const Taxonomy& tax) {
    switch (tax.id) {
        case TaxonomyId::ON3: return random_rotation(tax.space_dim);
        case TaxonomyId::GH4: return random_unitary_real(tax.n);
        default: {
            Mat a = Mat::Identity(tax.space_dim, tax.space_dim);
            a.topLeftCorner(2 * tax.n, 2 * tax.n) = random_unitary_real(tax.n);
            return a;
        }
    }
}

Tensor3 random_in(const Taxonomy& tax, const std::set<int>& comps) {
    Vec v = Vec::Zero(tax.ambient.rows());
    for (int i : comps) {
        const Mat& B = tax.component(i).basis;
        if (B.cols() == 0) continue;
        v += uniform(0.5, 2.0) * B * random_vector(static_cast<int>(B.cols())).normalized();
    }
    return Tensor3::from_flat(v, tax.space_dim);
}

std::set<int> random_nonempty_subset(const Taxonomy& tax, double p) {
    std::set<int> s;
    for (const Subspace& c : tax.subspaces)
        if (c.basis.cols() > 0 && uniform(0.0, 1.0) < p) s.insert(c.index);
    return s;
}

bool subset_of(const std::set<int>& a, const std::set<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

struct Pipeline {
    DecoratedStructure ds;
    ConnectionCoeffs nabla;
    ConnectionCoeffs nabla_bar;
    Tensor3 h;
};

Pipeline run(const FrameModel& model, const StructureTensor& s) {
    Pipeline p{validate_structure(s, model.frame), levi_civita(model), {}, {}};
    p.nabla_bar = canonical_connection(p.ds, p.nabla);
    p.h = second_fundamental(p.ds, p.nabla);
    return p;
}

double ops_diff(const BilinearOps& a, const BilinearOps& b) { return (a - b).max_abs(); }

// 1. Component dimensions of GH4 and ACMS12 as built.
Outcome taxonomy_dimensions() {
    Outcome o;
    const std::vector<int> gh3 = built_dims(TaxonomyId::GH4, 3), gh4 = built_dims(TaxonomyId::GH4, 4);
    const std::vector<int> ac2 = built_dims(TaxonomyId::ACMS12, 2), ac3 = built_dims(TaxonomyId::ACMS12, 3);
    o.require(gh3 == std::vector<int>{2, 16, 12, 6} && sum(gh3) == 36, "GH4 n=3 gave (" + join(gh3) + ")");
    o.require(gh4 == std::vector<int>{8, 40, 40, 8} && sum(gh4) == 96, "GH4 n=4 gave (" + join(gh4) + ")");
    for (int n : {3, 4}) {
        const int t1 = n * (n - 1) * (n - 2) / 3;
        o.require(built_dims(TaxonomyId::GH4, n)[0] == t1, "GH4 T1 differs from n(n-1)(n-2)/3 at n=" + std::to_string(n));
    }
    o.require(ac2 == std::vector<int>{0, 4, 0, 4, 3, 2, 1, 3, 6, 1, 4, 2} && sum(ac2) == 30 && 30 == 5 * 2 * 3,
              "ACMS12 n=2 gave (" + join(ac2) + ")");
    o.require(sum(ac3) == 84 && 84 == 7 * 3 * 4, "ACMS12 n=3 sums to " + std::to_string(sum(ac3)));
    if (o.pass)
        o.detail << "GH4 n=3 (" << join(gh3) << ")=36, n=4 (" << join(gh4) << ")=96; ACMS12 n=2 (" << join(ac2)
                 << ")=30, n=3 sum 84";
    return o;
}

// 2. Orthogonality, completeness, Pythagoras and group invariance of membership.
Outcome decomposition_soundness() {
    Outcome o;
    struct Case {
        TaxonomyId id;
        int n;
    };
    double worst_orth = 0, worst_sum = 0, worst_pyth = 0;
    int invariance_failures = 0, tensors = 0;
    for (const Case c : {Case{TaxonomyId::ON3, 3}, Case{TaxonomyId::ON3, 4}, Case{TaxonomyId::GH4, 2},
                         Case{TaxonomyId::GH4, 3}, Case{TaxonomyId::ACMS12, 1}, Case{TaxonomyId::ACMS12, 2},
                         Case{TaxonomyId::ACMS12C, 1}, Case{TaxonomyId::ACMS12C, 2}}) {
        const auto tax = shared_taxonomy(c.id, c.n);
        const FrameMetric I = FrameMetric::identity(tax->space_dim);
        for (int t = 0; t < 200; ++t) {
            ++tensors;
            const bool generic = t % 4 == 0;
            const std::set<int> comps = generic ? std::set<int>{} : random_nonempty_subset(*tax, 0.4);
            const Tensor3 h = generic ? Tensor3::from_flat(tax->ambient * random_vector(static_cast<int>(tax->ambient.cols())),
                                                           tax->space_dim)
                                      : random_in(*tax, comps);
            std::vector<Tensor3> parts;
            Tensor3 total(tax->space_dim);
            double sq = 0.0;
            for (const Subspace& s : tax->subspaces) {
                parts.push_back(tax->project(h, s.index));
                total += parts.back();
                sq += parts.back().frobenius() * parts.back().frobenius();
            }
            for (size_t a = 0; a < parts.size(); ++a)
                for (size_t b = a + 1; b < parts.size(); ++b)
                    worst_orth = std::max(worst_orth, std::abs(tensor3_inner(parts[a], parts[b], I)));
            worst_sum = std::max(worst_sum, (total - h).max_abs());
            const double hn = h.frobenius();
            if (hn > 0) worst_pyth = std::max(worst_pyth, std::abs(sq - hn * hn) / (hn * hn));
            const std::set<int> base = classify(h, *tax).membership;
            for (int g = 0; g < 20; ++g) {
                const Mat a = random_group_element(*tax);
                if (classify(act_orthogonal(a, h, I), *tax).membership != base) ++invariance_failures;
            }
        }
    }
    o.require(worst_orth <= 1e-10, "orthogonality " + std::to_string(worst_orth));
    o.require(worst_sum <= 1e-10, "completeness " + std::to_string(worst_sum));
    o.require(worst_pyth <= 1e-8, "pythagoras " + std::to_string(worst_pyth));
    o.require(invariance_failures == 0, std::to_string(invariance_failures) + " membership changes under the group");
    if (o.pass) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%d tensors x 20 actions; orth %.1e, sum %.1e, pyth %.1e", tensors, worst_orth,
                      worst_sum, worst_pyth);
        o.detail << buf;
    }
    return o;
}

// 3. Classes of the example groups.
Outcome example_classes() {
    Outcome o;
    struct Case {
        std::string name;
        CatalogParams params;
        std::set<int> expected;
    };
    const std::vector<Case> cases = {
        {"heisenberg_p1", {{"p", "3"}, {"branch", "generic"}}, {5, 7}},
        {"heisenberg_p1", {{"p", "2"}, {"branch", "sum0"}}, {5}},
        {"heisenberg_p1", {{"p", "2"}, {"branch", "lambda"}, {"lambda", "1"}}, {7}},
        {"heisenberg_p1", {{"p", "2"}, {"branch", "lambda"}, {"lambda", "-1"}}, {7}},
        {"heisenberg_1r", {{"r", "2"}, {"branch", "c8"}}, {8}},
        {"heisenberg_1r", {{"r", "2"}, {"branch", "c9"}}, {9}},
        {"e11", {{"lambda", "1"}, {"xi", "X1"}}, {11}},
        {"e11", {{"lambda", "1"}, {"xi", "X3"}}, {9}},
        {"complex_group", {{"case", "a"}}, {}},
        {"complex_group", {{"case", "b"}}, {12}},
    };
    std::string summary;
    for (const Case& c : cases) {
        const CatalogEntry e = catalog_load(c.name, c.params);
        const Pipeline p = run(e.model, e.structure);
        const ClassReport r = classify_structure(p.ds, p.h, TaxonomyId::ACMS12, 1e-8);
        std::string tag = c.name;
        for (const auto& [k, v] : c.params) tag += " " + k + "=" + v;
        o.require(r.membership == c.expected, tag + ": got " + label(r.membership) + ", expected " + label(c.expected));
        summary += (summary.empty() ? "" : ", ") + label(r.membership);
    }
    if (o.pass) o.detail << "10 cases: " << summary;
    return o;
}

// 4. h-route and nabla Phi route agree; reconstruction of h from nabla Phi.
Outcome dual_route() {
    Outcome o;
    double worst = 0.0;
    int entries = 0;
    for (const CatalogEntry& e : catalog_all_variants()) {
        const Pipeline p = run(e.model, e.structure);
        if (p.ds.kind != StructureKind::AlmostContact) continue;
        ++entries;
        const ClassReport rh = classify_structure(p.ds, p.h, TaxonomyId::ACMS12);
        const AcmsForms forms = acms_forms(p.ds, p.nabla);
        const ClassReport rc = classify_acms_phi(p.ds, forms);
        std::set<int> mapped;
        for (int c : rc.membership) mapped.insert(phi_to_h_index(c));
        o.require(mapped == rh.membership && cross_check_isomorphism(rh, rc),
                  e.name + ": " + label(rh.membership) + " vs " + class_label(TaxonomyId::ACMS12C, rc.membership));
        const double rec = (reconstruct_h(p.ds, forms.nablaPhi) - p.h).max_abs();
        worst = std::max(worst, rec);
        o.require(rec <= 1e-10, e.name + ": reconstruction residual " + std::to_string(rec));
    }
    if (o.pass) o.detail << entries << " a.c.m.s. entries agree; reconstruction residual " << worst;
    return o;
}

// 5. Identity suite on every catalog entry, plus random a.H. and f-structures for their family symmetries.
Outcome identity_suite() {
    Outcome o;
    double wt = 0, wc = 0, wm = 0, wf = 0;
    auto check = [&](const std::string& tag, const FrameModel& model, const StructureTensor& s) {
        const Pipeline p = run(model, s);
        const double t = (torsion_bar(p.h, model.frame) - torsion(p.nabla_bar, model)).max_abs();
        const double c = curvature_relation_check(model, p.nabla, p.nabla_bar, p.h);
        const double m = std::max(metric_residual(p.nabla_bar, model.frame), structure_parallel_residual(p.ds, p.nabla_bar));
        const double f = family_symmetry_residual(p.ds, p.h);
        wt = std::max(wt, t), wc = std::max(wc, c), wm = std::max(wm, m), wf = std::max(wf, f);
        o.require(t <= 1e-12, tag + ": torsion " + std::to_string(t));
        o.require(c <= 1e-10, tag + ": curvature " + std::to_string(c));
        o.require(m <= 1e-10, tag + ": parallel " + std::to_string(m));
        o.require(f <= 1e-12, tag + ": family " + std::to_string(f));
    };
    int count = 0;
    for (const CatalogEntry& e : catalog_all_variants()) {
        check(e.name, e.model, e.structure);
        ++count;
    }
    for (int t = 0; t < 5; ++t) {
        const FrameModel m4 = random_semidirect(4, false);
        check("random a.H.", m4, random_hermitian(m4.frame));
        const FrameModel m5 = random_semidirect(5, false);
        check("random f-structure", m5, random_f_structure(m5.frame, 1));
        check("random a.c.m.s.", m5, random_contact(m5.frame));
    }
    if (o.pass) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%d catalog + 15 random; torsion %.1e, curvature %.1e, parallel %.1e, family %.1e",
                      count, wt, wc, wm, wf);
        o.detail << buf;
    }
    return o;
}

/// alpha fitted to (nabla_X F)Y = alpha (<X,Y> xi - eta(Y) X), with the fit residual.
std::pair<double, double> sasakian_fit(const Pipeline& p) {
    const int n = p.ds.frame.dim();
    const std::vector<Mat> dF = covariant_derivative(p.nabla, p.ds.tensor);
    Vec a(n * n * n), b(n * n * n);
    int r = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec rhs = p.ds.frame.gram()(i, j) * p.ds.xi - p.ds.eta(j) * Vec::Unit(n, i);
            a.segment(r, n) = rhs;
            b.segment(r, n) = dF[static_cast<size_t>(i)].col(j);
            r += n;
        }
    const double alpha = a.dot(b) / a.dot(a);
    return {alpha, (alpha * a - b).cwiseAbs().maxCoeff()};
}

// 6. alpha-Sasakian and alpha-Kenmotsu recognizers.
Outcome alpha_recognizers() {
    Outcome o;
    const CatalogEntry hz = catalog_load("heisenberg3");
    const Pipeline p = run(hz.model, hz.structure);
    const ClassReport r = classify_structure(p.ds, p.h, TaxonomyId::ACMS12);
    const SpecialFlags fl = recognize_special(p.ds, p.h, acms_forms(p.ds, p.nabla), r);
    const auto [fit, fit_res] = sasakian_fit(p);
    const double qh = quasi_homogeneity(p.h, p.nabla_bar, p.ds.frame).residual;
    o.require(r.membership == std::set<int>{7}, "Heisenberg class " + label(r.membership));
    o.require(fl.alpha_sasakian.has_value() && std::abs(*fl.alpha_sasakian - 0.5) <= 1e-12,
              "Heisenberg alpha " + (fl.alpha_sasakian ? std::to_string(*fl.alpha_sasakian) : std::string("missing")));
    o.require(std::abs(fit - 0.5) <= 1e-12 && fit_res <= 1e-12, "definition fit alpha " + std::to_string(fit));
    o.require(qh <= 1e-12, "quasi-homogeneity residual " + std::to_string(qh));

    double worst = 0.0;
    for (double alpha : {1.0, 0.75, -1.3}) {
        for (int m : {1, 2}) {
            const CatalogEntry k = catalog_load("solvable_t1", {{"m", std::to_string(m)}, {"alpha", std::to_string(alpha)}});
            const Pipeline q = run(k.model, k.structure);
            const int n = 2 * m + 1;
            double construct = 0.0;
            for (int i = 0; i < 2 * m; ++i)
                for (int j = 0; j < 2 * m; ++j)
                    construct = std::max(construct, std::abs(q.h(i, j, n - 1) + alpha * (i == j ? 1.0 : 0.0)));
            o.require(construct <= 1e-12, "Kenmotsu construction h_XYxi != -alpha<X,Y>");
            const ClassReport kr = classify_structure(q.ds, q.h, TaxonomyId::ACMS12);
            const SpecialFlags kf = recognize_special(q.ds, q.h, acms_forms(q.ds, q.nabla), kr);
            o.require(kr.membership == std::set<int>{10}, "Kenmotsu class " + label(kr.membership));
            o.require(kf.alpha_kenmotsu.has_value(), "Kenmotsu flag missing");
            if (kf.alpha_kenmotsu) worst = std::max(worst, std::abs(*kf.alpha_kenmotsu - alpha));
        }
    }
    o.require(worst <= 1e-10, "Kenmotsu alpha error " + std::to_string(worst));
    if (o.pass) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "Heisenberg T7 alpha=%.15g (fit %.15g), qh %.1e; Kenmotsu T10 alpha error %.1e",
                      *fl.alpha_sasakian, fit, qh, worst);
        o.detail << buf;
    }
    return o;
}

// 7. su(2) with h = 1/2 <[X,Y],Z>: class, curvature, QR algebra.
Outcome nearly_particular_su2() {
    Outcome o;
    const CatalogEntry e = catalog_load("su2");
    const FrameModel& m = e.model;
    const FrameMetric& f = m.frame;
    const ConnectionCoeffs nab = levi_civita(m);
    Tensor3 h(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) h(i, j, k) = 0.5 * f.inner(m.bracket(Vec::Unit(3, i), Vec::Unit(3, j)), Vec::Unit(3, k));
    ConnectionCoeffs bar(3);
    const BilinearOps H = h_operators(h, f);
    for (int i = 0; i < 3; ++i) bar.op(i) = nab.op(i) - H.op(i);
    o.require((second_fundamental_from(f, nab, bar) - h).max_abs() <= 1e-15, "h from the connection");

    const ClassReport r = classify(pullback(h, f.onb()), *shared_taxonomy(TaxonomyId::ON3, 3));
    o.require(r.membership == std::set<int>{3}, "ON3 class " + class_label(TaxonomyId::ON3, r.membership));

    const Curvature R = riemann_curvature(nab, m), Rb = riemann_curvature(bar, m);
    double worst_exact = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const Vec x = Vec::Unit(3, i), y = Vec::Unit(3, j);
            const double lhs = f.inner((R.at(i, j) - Rb.at(i, j)) * y, x);
            const double rhs = H.apply(x, y).squaredNorm();
            worst_exact = std::max({worst_exact, std::abs(lhs - 0.25), std::abs(rhs - 0.25)});
        }
    o.require(worst_exact <= 1e-15, "<(R-Rbar)_XY Y, X> on basis pairs differs from 0.25 by " + std::to_string(worst_exact));

    const QRAlgebra alg = from_h(h, f);
    const QRAxioms ax = check_axioms(alg);
    const Endo A = fundamental_operator(alg);
    const IdealDecomposition d = ideal_decompose(alg);
    const double a_err = (A - 0.5 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff();
    o.require(ax.ok(), "QR axioms");
    o.require(a_err <= 1e-12, "A - I/2 = " + std::to_string(a_err));
    o.require(d.ideals.size() == 1 && d.ideals[0].cols() == 3 && d.abelian.cols() == 0, "ideal structure");
    o.require(is_qra(alg, d), "QRA flag");
    if (o.pass) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "ON3 T3; sectional term 0.25 (dev %.1e); A=I/2 (dev %.1e); 1 simple ideal; QRA",
                      worst_exact, a_err);
        o.detail << buf;
    }
    return o;
}

// 8. Normality and integrability against class membership.
Outcome normality_integrability() {
    Outcome o;
    const std::set<int> normal_set{5, 7, 8, 10}, integrable_set{3, 4, 8, 10, 11};
    int normal_bad = 0, integrable_bad = 0, total = 0;
    std::set<std::string> normal_examples;
    auto tally = [&](const std::set<int>& mem, double n1, double nf, double scale) {
        ++total;
        const bool n1_zero = n1 <= 1e-10 * scale, nf_zero = nf <= 1e-10 * scale;
        if (n1_zero != subset_of(mem, normal_set)) {
            ++normal_bad;
            if (normal_examples.size() < 3) normal_examples.insert(label(mem));
        }
        if (nf_zero != subset_of(mem, integrable_set)) ++integrable_bad;
    };
    for (const CatalogEntry& e : catalog_all_variants()) {
        const Pipeline p = run(e.model, e.structure);
        const ClassReport r = classify_structure(p.ds, p.h, TaxonomyId::ACMS12);
        const NTensors nt = n_tensors_direct(p.ds, e.model);
        tally(r.membership, nt.N1.max_abs(), nijenhuis(p.ds.tensor, e.model).max_abs(), std::max(1.0, e.model.ad.max_abs()));
    }
    for (int t = 0; t < 100; ++t) {
        const int m = 1 + t % 3;
        const auto tax = shared_taxonomy(TaxonomyId::ACMS12, m);
        const DecoratedStructure ds = canonical_contact(m);
        const Tensor3 h = random_in(*tax, random_nonempty_subset(*tax, 0.3));
        const ClassReport r = classify(h, *tax);
        const NTensors nt = n_tensors_from_h(ds, h);
        tally(r.membership, nt.N1.max_abs(), nijenhuis_contact(ds.tensor, h, ds.frame).max_abs(),
              std::max(1.0, h.max_abs()));
    }
    if (normal_bad) {
        std::string ex;
        for (const std::string& s : normal_examples) ex += (ex.empty() ? "" : ", ") + s;
        o.require(false, "N1 = 0 vs membership in {5,7,8,10}: " + std::to_string(normal_bad) + "/" +
                             std::to_string(total) + " disagree (e.g. " + ex + ")");
    }
    o.require(integrable_bad == 0, "N(F) = 0 vs membership in {3,4,8,10,11}: " + std::to_string(integrable_bad) + "/" +
                                       std::to_string(total) + " disagree");
    if (o.pass) o.detail << total << " structures, no disagreement";
    else if (integrable_bad == 0) o.detail << "; integrability agrees on all " << total;
    return o;
}

// 9. Conformal changes.
Outcome conformal_invariance() {
    Outcome o;
    double wp = 0, wmu = 0, wh = 0;
    for (int t = 0; t < 20; ++t) {
        const FrameModel mp = random_semidirect(4);
        const DecoratedStructure dp = validate_structure(random_product(mp.frame, 2), mp.frame);
        const ConnectionCoeffs nab = levi_civita(mp);
        const Covector drho = random_vector(4);
        wp = std::max(wp, (second_fundamental(dp, conformal_perturb(nab, drho, mp.frame)) - second_fundamental(dp, nab)).max_abs());

        const int n = 4 + 2 * (t % 2);
        const FrameModel mh = random_semidirect(n);
        const DecoratedStructure dh = validate_structure(random_hermitian(mh.frame), mh.frame);
        const ConnectionCoeffs nh = levi_civita(mh);
        const Covector dr = random_vector(n);
        const ConnectionCoeffs ph = conformal_perturb(nh, dr, mh.frame);
        wmu = std::max(wmu, (mu_tensor(dh, ph) - mu_tensor(dh, nh)).max_abs());
        wh = std::max(wh, (second_fundamental(dh, ph) - second_fundamental(dh, nh) - hermitian_conformal_correction(dh, dr)).max_abs());
    }
    o.require(wp <= 1e-12, "a.p. h changes by up to " + std::to_string(wp));
    o.require(wmu <= 1e-10, "a.H. mu changes by " + std::to_string(wmu));
    o.require(wh <= 1e-10, "a.H. h correction residual " + std::to_string(wh));
    char buf[200];
    std::snprintf(buf, sizeof buf, "; mu dev %.1e, a.H. correction residual %.1e", wmu, wh);
    o.detail << buf;
    return o;
}

// 10. Geodesic evolution closed forms and periodicity.
Outcome geodesic_evolution() {
    Outcome o;
    const double a = 1.3, b = 0.7;
    Mat P0 = Mat::Zero(4, 4), D = Mat::Zero(4, 4);
    P0.diagonal() << 1, -1, 1, -1;
    D.block(0, 0, 2, 2) << 0, a, a, 0;   // cos branch
    D.block(2, 2, 2, 2) << 0, b, -b, 0;  // cosh branch
    double worst = 0.0;
    for (double lam : {a, b}) {
        for (double t : {0.1, 1.0, std::numbers::pi / lam}) {
            const GeodesicEvolution ev = evolve_along_geodesic(P0, D, t);
            Mat expect = Mat::Zero(4, 4);
            expect.block(0, 0, 2, 2) = std::cos(a * t) * P0.block(0, 0, 2, 2) + std::sin(a * t) / a * D.block(0, 0, 2, 2);
            expect.block(2, 2, 2, 2) = std::cosh(b * t) * P0.block(2, 2, 2, 2) + std::sinh(b * t) / b * D.block(2, 2, 2, 2);
            worst = std::max(worst, (ev.P - expect).cwiseAbs().maxCoeff());
        }
    }
    o.require(worst <= 1e-10, "closed form deviation " + std::to_string(worst));

    Mat Dc = Mat::Zero(4, 4);
    Dc.block(0, 0, 2, 2) << 0, a, a, 0;
    Dc.block(2, 2, 2, 2) << 0, -a, -a, 0;
    double period = 0.0;
    for (double t : {0.1, 1.0, std::numbers::pi / a}) {
        const Mat Pt = evolve_along_geodesic(P0, Dc, t).P;
        for (int k = 1; k <= 3; ++k) {
            const Mat Pk = evolve_along_geodesic(P0, Dc, t + 2 * std::numbers::pi * k / a).P;
            for (int s = 0; s < 4; ++s) {
                const Vec x = random_vector(4);
                period = std::max(period, (Pk * x - Pt * x).cwiseAbs().maxCoeff());
            }
        }
    }
    o.require(period <= 1e-9, "periodicity deviation " + std::to_string(period));
    if (o.pass) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "closed forms %.1e, periodicity %.1e", worst, period);
        o.detail << buf;
    }
    return o;
}

double automorphism_residual(const FrameModel& m, const Mat& S) {
    const int n = m.dim();
    double r = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec x = Vec::Unit(n, i), y = Vec::Unit(n, j);
            r = std::max(r, (S * m.bracket(x, y) - m.bracket(S * x, S * y)).cwiseAbs().maxCoeff());
        }
    return r;
}

// 11. Structures induced by sigma-affinors.
Outcome induced_coincidences() {
    Outcome o;
    double w2 = 0, w3 = 0;
    for (int t = 0; t < 10; ++t) {
        const FrameModel m = random_semidirect(4);
        const FrameMetric& f = m.frame;
        const ConnectionCoeffs nab = t % 2 ? levi_civita(m) : random_metric_connection(f);
        const AlmostProduct ap = random_product(f, 2);
        const ConnectionCoeffs c43 =
            canonical_connection_sigma(validate_structure(SigmaAffinor{ap.P, 2}, f), nab, SigmaFormula::FiniteOrder);
        w2 = std::max(w2, ops_diff(c43, canonical_connection(validate_structure(ap, f), nab)));

        const double th = 2.0 * std::numbers::pi / 3.0;
        Mat hat = Mat::Zero(4, 4);
        hat.block(0, 0, 2, 2) << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        hat.block(2, 2, 2, 2) = hat.block(0, 0, 2, 2);
        const Mat S3 = in_frame(random_onb(f), hat);
        const StructureTensor J = induce_from_affinor(SigmaAffinor{S3, 3}, f);
        const ConnectionCoeffs s43 =
            canonical_connection_sigma(validate_structure(SigmaAffinor{S3, 3}, f), nab, SigmaFormula::FiniteOrder);
        w3 = std::max(w3, ops_diff(s43, canonical_connection(validate_structure(J, f), nab)));
    }
    o.require(w2 <= 1e-12, "order 2 connections differ by " + std::to_string(w2));
    o.require(w3 <= 1e-10, "order 3 connections differ by " + std::to_string(w3));

    const CatalogEntry e = catalog_load("e11", {{"lambda", "1"}, {"xi", "X3"}});
    std::string found;
    for (double sign : {1.0, -1.0}) {
        Mat S = Mat::Zero(3, 3);
        S(1, 0) = 1.0;
        S(0, 1) = -1.0;
        S(2, 2) = sign;
        const StructureTensor induced = induce_from_affinor(SigmaAffinor{S, 4}, e.model.frame);
        const Pipeline p = run(e.model, induced);
        const std::set<int> mem = classify_structure(p.ds, p.h, TaxonomyId::ACMS12).membership;
        const std::set<int> allowed = sign > 0 ? std::set<int>{5, 7, 8, 10} : std::set<int>{6, 9};
        const double aut = automorphism_residual(e.model, S);
        char buf[200];
        std::snprintf(buf, sizeof buf, "S xi = %sxi: %s (automorphism residual %.2g)", sign > 0 ? "" : "-",
                      label(mem).c_str(), aut);
        found += (found.empty() ? "" : ", ") + std::string(buf);
        o.require(subset_of(mem, allowed), std::string("order 4 on E(1,1) with S xi = ") + (sign > 0 ? "" : "-") +
                                               "xi lies outside " + label(allowed));
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "%sorder 2 diff %.1e, order 3 diff %.1e; ", o.pass ? "" : "; ", w2, w3);
    o.detail << buf << found;
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"taxonomy dimensions", taxonomy_dimensions},
        {"decomposition soundness", decomposition_soundness},
        {"example classes", example_classes},
        {"dual-route a.c.m.s. classification", dual_route},
        {"identity suite", identity_suite},
        {"alpha recognizers", alpha_recognizers},
        {"nearly particular su(2)", nearly_particular_su2},
        {"normality and integrability", normality_integrability},
        {"conformal invariance", conformal_invariance},
        {"geodesic evolution", geodesic_evolution},
        {"induced-structure coincidences", induced_coincidences},
    };
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail.str(std::string("exception: ") + ex.what());
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
    }
    std::printf("%zu criteria, %zu passed, %d failed\n", criteria.size(), criteria.size() - failed, failed);
    return failed ? 1 : 0;
}
