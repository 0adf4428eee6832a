#include <algorithm>

#include "doctest.h"
#include "strucgeo/catalog.hpp"
#include "strucgeo/classifier.hpp"
#include "test_support.hpp"

using namespace sg;
using namespace sgtest;

namespace {

std::set<int> range_set(int count) {
    std::set<int> s;
    for (int i = 1; i <= count; ++i) s.insert(i);
    return s;
}

/// Random tensor supported on the listed components, each with norm between 0.5 and 2.
Tensor3 random_in(const Taxonomy& tax, const std::set<int>& comps) {
    Vec v = Vec::Zero(tax.ambient.rows());
    for (int i : comps) {
        const Mat& B = tax.component(i).basis;
        if (B.cols() == 0) continue;
        const Vec c = random_vector(static_cast<int>(B.cols()));
        v += uniform(0.5, 2.0) * B * c.normalized();
    }
    return Tensor3::from_flat(v, tax.space_dim);
}

Mat canonical_F(int m) {
    Mat F = Mat::Zero(2 * m + 1, 2 * m + 1);
    F.topLeftCorner(2 * m, 2 * m) = standard_complex(m);
    return F;
}

/// Real form of a random unitary matrix of size m, acting on (E, JE) coordinates.
Mat random_unitary_real(int m) {
    const Mat a = random_matrix(m, m), b = random_matrix(m, m);
    Eigen::MatrixXcd z(m, m);
    z.real() = a;
    z.imag() = b;
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    const Eigen::MatrixXcd u = qr.householderQ();
    Mat r(2 * m, 2 * m);
    r << u.real(), -u.imag(), u.imag(), u.real();
    return r;
}

DecoratedStructure canonical_contact(int m) {
    const FrameMetric I = FrameMetric::identity(2 * m + 1);
    return validate_structure(make_almost_contact(canonical_F(m), Vec::Unit(2 * m + 1, 2 * m), I), I);
}

Tensor3 h_of(const CatalogEntry& ce, const DecoratedStructure& ds) {
    return second_fundamental(ds, levi_civita(ce.model));
}

std::set<int> random_subset(int count) {
    std::set<int> s;
    for (int i = 1; i <= count; ++i)
        if (uniform(0.0, 1.0) < 0.3) s.insert(i);
    return s;
}

std::set<int> nonempty(const Taxonomy& tax, const std::set<int>& s) {
    std::set<int> out;
    for (int i : s)
        if (tax.component(i).basis.cols() > 0) out.insert(i);
    return out;
}

bool includes_label(const ClassReport& r, const std::string& name) {
    return std::find(r.named_labels.begin(), r.named_labels.end(), name) != r.named_labels.end();
}

}  // namespace

TEST_CASE("component dimensions match the closed forms") {
    CHECK(expected_dims(TaxonomyId::GH4, 3) == std::vector<int>{2, 16, 12, 6});
    CHECK(expected_dims(TaxonomyId::ON3, 4) == std::vector<int>{4, 16, 4});
    CHECK(expected_dims(TaxonomyId::ACMS12, 2) == std::vector<int>{0, 4, 0, 4, 3, 2, 1, 3, 6, 1, 4, 2});
    CHECK(expected_dims(TaxonomyId::ACMS12, 3) == std::vector<int>{2, 16, 12, 6, 8, 6, 1, 8, 12, 1, 6, 6});

    struct Case {
        TaxonomyId id;
        int n;
    };
    for (const Case c : {Case{TaxonomyId::ON3, 2}, Case{TaxonomyId::ON3, 3}, Case{TaxonomyId::ON3, 4},
                         Case{TaxonomyId::ON3, 5}, Case{TaxonomyId::GH4, 1}, Case{TaxonomyId::GH4, 2},
                         Case{TaxonomyId::GH4, 3}, Case{TaxonomyId::GH4, 4}, Case{TaxonomyId::ACMS12, 1},
                         Case{TaxonomyId::ACMS12, 2}, Case{TaxonomyId::ACMS12, 3}, Case{TaxonomyId::ACMS12C, 1},
                         Case{TaxonomyId::ACMS12C, 2}, Case{TaxonomyId::ACMS12C, 3}}) {
        CAPTURE(taxonomy_name(c.id));
        CAPTURE(c.n);
        const auto tax = shared_taxonomy(c.id, c.n);
        CHECK(tax->ambient.cols() == expected_ambient_dim(c.id, c.n));
        const std::vector<int> dims = expected_dims(c.id, c.n);
        int total = 0;
        for (size_t i = 0; i < dims.size(); ++i) {
            CHECK(tax->subspaces[i].basis.cols() == dims[i]);
            total += dims[i];
        }
        CHECK(total == tax->ambient.cols());
    }
    CHECK(expected_ambient_dim(TaxonomyId::ACMS12, 2) == 30);
    CHECK(expected_ambient_dim(TaxonomyId::ACMS12, 3) == 84);
}

TEST_CASE("components are orthonormal, mutually orthogonal and span the ambient space") {
    for (const auto& [id, n] : std::vector<std::pair<TaxonomyId, int>>{
             {TaxonomyId::ON3, 4}, {TaxonomyId::GH4, 3}, {TaxonomyId::ACMS12, 2}, {TaxonomyId::ACMS12C, 3}}) {
        const auto tax = shared_taxonomy(id, n);
        Mat all(tax->ambient.rows(), 0);
        for (const Subspace& s : tax->subspaces) {
            const Mat B = s.basis;
            Mat grown(all.rows(), all.cols() + B.cols());
            grown << all, B;
            all = grown;
        }
        CHECK(max_abs(all.transpose() * all - Mat::Identity(all.cols(), all.cols())) < 1e-10);
        CHECK(max_abs(all * all.transpose() - tax->ambient * tax->ambient.transpose()) < 1e-10);
    }
}

TEST_CASE("taxonomy construction rejects unsupported sizes") {
    CHECK_THROWS_AS(build_taxonomy(TaxonomyId::ON3, 1), Error);
    CHECK_THROWS_AS(build_taxonomy(TaxonomyId::GH4, 0), Error);
}

TEST_CASE("component norms satisfy Pythagoras and projections are idempotent") {
    const auto tax = shared_taxonomy(TaxonomyId::ACMS12, 2);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor3 h = random_in(*tax, range_set(12));
        const ClassReport r = classify(h, *tax);
        double sum = 0.0;
        for (const auto& [i, c] : r.component_norms) sum += c * c;
        CHECK(std::abs(sum - r.norm * r.norm) <= 1e-10 * r.norm * r.norm);
        Tensor3 rebuilt(tax->space_dim);
        for (int i = 1; i <= 12; ++i) {
            const Tensor3 p = tax->project(h, i);
            CHECK((tax->project(p, i) - p).max_abs() < 1e-12);
            rebuilt += p;
        }
        CHECK((rebuilt - h).max_abs() < 1e-12);
    }
}

TEST_CASE("membership is invariant under the structure group") {
    for (int trial = 0; trial < 20; ++trial) {
        {
            const auto tax = shared_taxonomy(TaxonomyId::ACMS12, 2);
            Mat Q = Mat::Identity(5, 5);
            Q.topLeftCorner(4, 4) = random_unitary_real(2);
            const Tensor3 h = random_in(*tax, random_subset(12));
            const ClassReport a = classify(h, *tax), b = classify(pullback(h, Q), *tax);
            CHECK(a.membership == b.membership);
            for (int i = 1; i <= 12; ++i)
                CHECK(std::abs(a.component_norms.at(i) - b.component_norms.at(i)) < 1e-10);
        }
        {
            const auto tax = shared_taxonomy(TaxonomyId::GH4, 3);
            const Mat Q = random_unitary_real(3);
            const Tensor3 h = random_in(*tax, random_subset(4));
            const ClassReport a = classify(h, *tax), b = classify(pullback(h, Q), *tax);
            CHECK(a.membership == b.membership);
            for (int i = 1; i <= 4; ++i) CHECK(std::abs(a.component_norms.at(i) - b.component_norms.at(i)) < 1e-10);
        }
        {
            const auto tax = shared_taxonomy(TaxonomyId::ON3, 4);
            const Mat Q = random_rotation(4);
            const Tensor3 h = random_in(*tax, random_subset(3));
            const ClassReport a = classify(h, *tax), b = classify(pullback(h, Q), *tax);
            CHECK(a.membership == b.membership);
            for (int i = 1; i <= 3; ++i) CHECK(std::abs(a.component_norms.at(i) - b.component_norms.at(i)) < 1e-10);
        }
    }
}

TEST_CASE("random tensors in chosen components are classified into exactly those components") {
    const auto tax = shared_taxonomy(TaxonomyId::ACMS12, 3);
    for (int trial = 0; trial < 40; ++trial) {
        const std::set<int> s = random_subset(12);
        CHECK(classify(random_in(*tax, s), *tax).membership == s);
    }
}

TEST_CASE("zero tensor and ambient violations") {
    const auto tax = shared_taxonomy(TaxonomyId::GH4, 2);
    const ClassReport r = classify(Tensor3(4), *tax);
    CHECK(r.membership.empty());
    CHECK(r.named_labels == std::vector<std::string>{"Kaehlerian"});
    CHECK_FALSE(r.strict);
    try {
        classify(random_tensor(4), *tax);
        FAIL("expected AmbientViolation");
    } catch (const Error& err) {
        CHECK(err.code() == Errc::AmbientViolation);
    }
    CHECK_THROWS_AS(classify(Tensor3(3), *tax), Error);
}

TEST_CASE("strictness follows the smallest eigenvalue of r1") {
    const auto tax = shared_taxonomy(TaxonomyId::ON3, 3);
    const ClassReport su2 = classify(epsilon3(0.5), *tax);
    CHECK(su2.membership == std::set<int>{3});
    CHECK(su2.strict);
    CHECK(su2.r1_min_eigenvalue == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(includes_label(su2, "nearly particular"));
}

TEST_CASE("C classes correspond to h classes through nabla Phi") {
    for (int m : {1, 2, 3}) {
        CAPTURE(m);
        const auto tax = shared_taxonomy(TaxonomyId::ACMS12, m);
        const DecoratedStructure ds = canonical_contact(m);
        for (int i = 1; i <= 12; ++i) {
            const Mat& B = tax->component(i).basis;
            for (Eigen::Index col = 0; col < B.cols(); ++col) {
                const Tensor3 h = Tensor3::from_flat(B.col(col), 2 * m + 1);
                const AcmsForms forms = acms_forms_from_h(ds, h);
                const ClassReport rh = classify(h, *tax);
                const ClassReport rp = classify_acms_via_nabla_phi(forms.nablaPhi, m);
                CAPTURE(i);
                CHECK(rh.membership == std::set<int>{i});
                CHECK(rp.membership == std::set<int>{h_to_phi_index(i)});
                CHECK(cross_check_isomorphism(rh, rp));
            }
        }
    }
    for (int c = 1; c <= 12; ++c) CHECK(h_to_phi_index(phi_to_h_index(c)) == c);
    CHECK(phi_to_h_index(6) == 7);
    CHECK(phi_to_h_index(5) == 10);
    CHECK_THROWS_AS(phi_to_h_index(13), Error);
}

TEST_CASE("catalog entries land in their listed classes") {
    for (const CatalogEntry& ce : catalog_all_variants()) {
        CAPTURE(ce.name);
        for (const auto& [k, v] : ce.params) CAPTURE(k + "=" + v);
        const DecoratedStructure ds = validate_structure(ce.structure, ce.model.frame);
        const Tensor3 h = h_of(ce, ds);
        if (ce.expected_class) {
            const ClassReport rh = classify_structure(ds, h);
            CHECK(rh.membership == *ce.expected_class);
            const AcmsForms forms = acms_forms(ds, levi_civita(ce.model));
            const ClassReport rp = classify_acms_phi(ds, forms);
            if (ce.expected_phi_class) CHECK(rp.membership == *ce.expected_phi_class);
            CHECK(cross_check_isomorphism(rh, rp));
            CHECK_NOTHROW(recognize_special(ds, h, forms, rh));
        }
        if (ce.expected_on3_class) {
            REQUIRE(ce.user_canonical);
            const Tensor3 hu = second_fundamental_from(ce.model.frame, levi_civita(ce.model), *ce.user_canonical);
            const ClassReport r = classify_structure(ds, hu, TaxonomyId::ON3);
            CHECK(r.membership == *ce.expected_on3_class);
        }
    }
}

TEST_CASE("e11 with xi = X3 is of class T9 and the Heisenberg group is alpha-Sasakian") {
    {
        const CatalogEntry ce = catalog_load("e11");
        const DecoratedStructure ds = validate_structure(ce.structure, ce.model.frame);
        const ClassReport r = classify_structure(ds, h_of(ce, ds));
        CHECK(r.membership == std::set<int>{9});
        CHECK(includes_label(r, "almost cosymplectic"));
    }
    {
        const CatalogEntry ce = catalog_load("heisenberg3");
        const DecoratedStructure ds = validate_structure(ce.structure, ce.model.frame);
        const Tensor3 h = h_of(ce, ds);
        const AcmsForms forms = acms_forms(ds, levi_civita(ce.model));
        const ClassReport rp = classify_acms_phi(ds, forms);
        CHECK(rp.membership == std::set<int>{6});
        const ClassReport rh = classify_structure(ds, h);
        CHECK(rh.membership == std::set<int>{7});
        const SpecialFlags f = recognize_special(ds, h, forms, rh);
        REQUIRE(f.alpha_sasakian);
        CHECK(*f.alpha_sasakian == doctest::Approx(forms.deltaPhi.dot(ds.xi) / 2.0).epsilon(1e-12));
        CHECK(f.normal);
        CHECK(f.quasi_sasakian);
        CHECK_FALSE(f.cosymplectic);
        CHECK_FALSE(f.alpha_kenmotsu);
    }
    {
        const CatalogEntry ce = catalog_load("heisenberg_1r", {{"branch", "c8"}});
        const DecoratedStructure ds = validate_structure(ce.structure, ce.model.frame);
        const ClassReport rp = classify_acms_phi(ds, acms_forms(ds, levi_civita(ce.model)));
        CHECK(rp.membership == std::set<int>{8});
    }
}

TEST_CASE("alpha-Kenmotsu recognition on the solvable family") {
    for (const std::string alpha : {"1", "-0.5", "2"}) {
        const CatalogEntry ce = catalog_load("solvable_t1", {{"m", "2"}, {"alpha", alpha}});
        const DecoratedStructure ds = validate_structure(ce.structure, ce.model.frame);
        const Tensor3 h = h_of(ce, ds);
        const AcmsForms forms = acms_forms(ds, levi_civita(ce.model));
        const ClassReport r = classify_structure(ds, h);
        CHECK(r.membership == std::set<int>{10});
        const SpecialFlags f = recognize_special(ds, h, forms, r);
        REQUIRE(f.alpha_kenmotsu);
        CHECK(std::abs(*f.alpha_kenmotsu) == doctest::Approx(std::abs(std::stod(alpha))).epsilon(1e-12));
        CHECK(f.normal);
        CHECK(f.integrable);
        CHECK(includes_label(r, "trans-Sasakian"));
    }
}

TEST_CASE("special recognizers agree with the class route on random structures") {
    for (int trial = 0; trial < 100; ++trial) {
        const int m = trial % 2 ? 2 : 1;
        const FrameMetric f(random_spd(2 * m + 1));
        const DecoratedStructure ds = validate_structure(random_contact(f), f);
        const auto tax = shared_taxonomy(TaxonomyId::ACMS12, m);
        std::set<int> s = random_subset(12);
        if (trial % 10 == 0) s.clear();
        if (trial % 10 == 1) s = {1 + (trial / 10) % 12};
        s = nonempty(*tax, s);
        const Tensor3 hc = random_in(*tax, s);
        const Tensor3 h = pullback(hc, ds.adapted.inverse());
        CHECK((to_adapted(ds, h) - hc).max_abs() < 1e-10);
        const ClassReport r = classify_structure(ds, h);
        CAPTURE(class_label(TaxonomyId::ACMS12, s));
        CHECK(r.membership == s);
        const AcmsForms forms = acms_forms_from_h(ds, h);
        // Classification of nabla Phi routes through independent formulas.
        CHECK(cross_check_isomorphism(r, classify_acms_phi(ds, forms)));
        SpecialFlags flags;
        REQUIRE_NOTHROW(flags = recognize_special(ds, h, forms, r));
        CHECK(flags.cosymplectic == s.empty());
        CHECK(flags.alpha_sasakian.has_value() == (s == std::set<int>{7}));
        CHECK(flags.alpha_kenmotsu.has_value() == (s == std::set<int>{10}));
    }
}

TEST_CASE("named classes") {
    ClassReport r;
    r.taxonomy = TaxonomyId::GH4;
    r.membership = {1};
    CHECK(r.membership.size() == 1);
    std::vector<std::string> labels = named_classes(r);
    CHECK(labels.front() == "T1");
    for (const char* name : {"NK (nearly Kaehlerian)", "QK (quasi-Kaehlerian)", "SK (semi-Kaehlerian)", "G1",
                             "U (almost Hermitian)"})
        CHECK(std::find(labels.begin(), labels.end(), name) != labels.end());
    CHECK(std::find(labels.begin(), labels.end(), "H (Hermitian)") == labels.end());

    r.membership = {3, 4};
    labels = named_classes(r);
    CHECK(labels.front() == "T3+T4");
    CHECK(std::find(labels.begin(), labels.end(), "H (Hermitian)") != labels.end());
    CHECK(std::find(labels.begin(), labels.end(), "G1") != labels.end());
    CHECK(std::find(labels.begin(), labels.end(), "SK (semi-Kaehlerian)") == labels.end());

    r.taxonomy = TaxonomyId::ACMS12;
    r.membership = {5, 7};
    labels = named_classes(r);
    CHECK(labels.front() == "T5+T7");
    CHECK(std::find(labels.begin(), labels.end(), "quasi-Sasakian") != labels.end());
    CHECK(std::find(labels.begin(), labels.end(), "normal") != labels.end());
    CHECK(std::find(labels.begin(), labels.end(), "trans-Sasakian") == labels.end());

    r.taxonomy = TaxonomyId::ACMS12C;
    r.membership = {6};
    labels = named_classes(r);
    CHECK(labels.front() == "C6");
    CHECK(std::find(labels.begin(), labels.end(), "alpha-Sasakian") != labels.end());

    r.membership.clear();
    CHECK(named_classes(r) == std::vector<std::string>{"cosymplectic"});
    r.taxonomy = TaxonomyId::ON3;
    CHECK(named_classes(r) == std::vector<std::string>{"particular"});
    CHECK(class_label(TaxonomyId::ACMS12, {}) == "T0");
}

TEST_CASE("taxonomy selection and parameters") {
    CHECK(taxonomy_for(StructureKind::AlmostHermitian) == TaxonomyId::GH4);
    CHECK(taxonomy_for(StructureKind::AlmostContact) == TaxonomyId::ACMS12);
    CHECK(taxonomy_for(StructureKind::AlmostProduct) == TaxonomyId::ON3);
    CHECK(parse_taxonomy_id("ACMS12C") == TaxonomyId::ACMS12C);
    CHECK_FALSE(parse_taxonomy_id("acms"));
    const FrameMetric f(random_spd(4));
    const DecoratedStructure ds = validate_structure(random_product(f, 2), f);
    CHECK(taxonomy_param(ds, TaxonomyId::ON3) == 4);
    CHECK_THROWS_AS(taxonomy_param(ds, TaxonomyId::GH4), Error);
}

TEST_CASE("almost Hermitian structures classify in any frame") {
    const auto tax = shared_taxonomy(TaxonomyId::GH4, 2);
    for (int trial = 0; trial < 20; ++trial) {
        const FrameMetric f(random_spd(4));
        const DecoratedStructure ds = validate_structure(random_hermitian(f), f);
        const std::set<int> s = random_subset(4);
        const Tensor3 hc = random_in(*tax, s);
        const ClassReport r = classify_structure(ds, pullback(hc, ds.adapted.inverse()));
        CHECK(r.membership == nonempty(*tax, s));
    }
}

TEST_CASE("parallel batch classification equals the serial loop") {
    const auto tax = shared_taxonomy(TaxonomyId::ACMS12, 2);
    std::vector<Tensor3> hs;
    for (int i = 0; i < 200; ++i) hs.push_back(random_in(*tax, random_subset(12)));
    const std::vector<ClassReport> a = classify_batch(hs, *tax), b = classify_batch_serial(hs, *tax);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].membership == b[i].membership);
        CHECK(a[i].component_norms == b[i].component_norms);
        CHECK(a[i].named_labels == b[i].named_labels);
    }
    hs.push_back(random_tensor(5));
    CHECK_THROWS_AS(classify_batch(hs, *tax), Error);
}

TEST_CASE("single components set the expected special flags") {
    const std::set<int> normal{3, 4, 5, 7, 8, 10}, integrable{3, 4, 8, 10, 11};
    const std::set<int> not_semi{4, 7, 10, 11}, almost_cosym{2, 9};
    for (int m : {2, 3}) {
        const auto tax = shared_taxonomy(TaxonomyId::ACMS12, m);
        const DecoratedStructure ds = canonical_contact(m);
        for (int i : nonempty(*tax, range_set(12))) {
            CAPTURE(m);
            CAPTURE(i);
            const Tensor3 h = random_in(*tax, {i});
            const ClassReport r = classify(h, *tax);
            const SpecialFlags f = recognize_special(ds, h, acms_forms_from_h(ds, h), r);
            CHECK(f.normal == normal.contains(i));
            CHECK(f.integrable == integrable.contains(i));
            CHECK(f.semi_cosymplectic == !not_semi.contains(i));
            CHECK(f.almost_cosymplectic == almost_cosym.contains(i));
            CHECK(f.quasi_sasakian == (i == 5 || i == 7));
            CHECK(f.almost_k_contact == (i != 11 && i != 12));
            CHECK(f.v_parallel == (i == 11 || i == 12));
            CHECK(f.nearly_k_cosymplectic == (i == 1));
        }
    }
}
