#include "strucgeo/catalog.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace sg {

namespace {

using Brackets = std::vector<std::tuple<int, int, int, double>>;

class ParamReader {
public:
    ParamReader(const std::string& entry, const CatalogParams& given, const CatalogInfo& info)
        : entry_(entry), given_(given) {
        for (const auto& [k, v] : given_) {
            bool known = false;
            for (const auto& spec : info.params) known = known || spec.key == k;
            if (!known) throw Error(Errc::InvalidParams, entry_ + ": unknown parameter '" + k + "'");
        }
        for (const auto& spec : info.params) {
            auto it = given_.find(spec.key);
            resolved_[spec.key] = it == given_.end() ? spec.default_value : it->second;
        }
    }

    const std::string& str(const std::string& key) const { return resolved_.at(key); }

    int integer(const std::string& key) const {
        const std::string& s = str(key);
        size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw Error(Errc::InvalidParams, entry_ + ": '" + key + "' must be an integer");
        return v;
    }

    double real(const std::string& key) const {
        const std::string& s = str(key);
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size() || !std::isfinite(v))
            throw Error(Errc::InvalidParams, entry_ + ": '" + key + "' must be a finite number");
        return v;
    }

    std::string choice(const std::string& key, std::initializer_list<const char*> allowed) const {
        const std::string& s = str(key);
        for (const char* a : allowed)
            if (s == a) return s;
        std::string msg = entry_ + ": '" + key + "' must be one of";
        for (const char* a : allowed) msg += std::string(" ") + a;
        throw Error(Errc::InvalidParams, msg);
    }

    void fail(const std::string& why) const { throw Error(Errc::InvalidParams, entry_ + ": " + why); }

    const CatalogParams& resolved() const { return resolved_; }

private:
    std::string entry_;
    const CatalogParams& given_;
    CatalogParams resolved_;
};

Mat rotation_block(int m) {
    // m copies of [[0,-1],[1,0]] on the diagonal.
    Mat A = Mat::Zero(2 * m, 2 * m);
    for (int k = 0; k < m; ++k) {
        A(2 * k + 1, 2 * k) = 1.0;
        A(2 * k, 2 * k + 1) = -1.0;
    }
    return A;
}

/// a.c.m.s. with xi = e_{n-1} and F given on the first n-1 coordinates.
AlmostContact contact_with_last_xi(const Mat& FV, const FrameMetric& frame) {
    const int n = frame.dim();
    Mat F = Mat::Zero(n, n);
    F.topLeftCorner(n - 1, n - 1) = FV;
    return make_almost_contact(F, Vec::Unit(n, n - 1), frame);
}

const CatalogInfo& info_for(const std::string& name) {
    for (const auto& info : catalog_list())
        if (info.name == name) return info;
    throw Error(Errc::UnknownCatalogEntry, "unknown catalog entry '" + name + "'");
}

CatalogEntry heisenberg_p1(const ParamReader& pr) {
    const int p = pr.integer("p");
    if (p < 1) pr.fail("p must be >= 1");
    const std::string branch = pr.choice("branch", {"lambda", "sum0", "generic"});
    const int n = 2 * p + 1;

    Brackets br;
    for (int i = 0; i < p; ++i) br.emplace_back(i, p + i, 2 * p, 1.0);

    // F on V is [[A, -C], [C, A]] with A = 0 and C symmetric orthogonal.
    Mat C;
    CatalogEntry e;
    if (branch == "lambda") {
        const double lam = pr.real("lambda");
        if (std::abs(std::abs(lam) - 1.0) > 1e-12) pr.fail("lambda must be +1 or -1 for F to be an a.c.m.s.");
        C = lam * Mat::Identity(p, p);
        e.expected_class = std::set<int>{7};
        e.expected_phi_class = std::set<int>{6};
    } else if (branch == "sum0") {
        if (p % 2 != 0) pr.fail("branch sum0 needs an even p");
        C = Mat::Identity(p, p);
        for (int i = 1; i < p; i += 2) C(i, i) = -1.0;
        e.expected_class = std::set<int>{5};
        e.expected_phi_class = std::set<int>{7};
    } else {
        if (p < 3) pr.fail("branch generic needs p >= 3 (for p <= 2 every admissible F is in one of the pure branches)");
        Vec v(p);
        for (int i = 0; i < p; ++i) v(i) = i + 1.0;
        v.normalize();
        C = 2.0 * v * v.transpose() - Mat::Identity(p, p);
        e.expected_class = std::set<int>{5, 7};
        e.expected_phi_class = std::set<int>{6, 7};
    }
    Mat FV = Mat::Zero(2 * p, 2 * p);
    FV.bottomLeftCorner(p, p) = C;
    FV.topRightCorner(p, p) = -C;

    e.description = "generalized Heisenberg group H(p,1) with xi = Z";
    e.model = FrameModel::from_brackets(Mat::Identity(n, n), br);
    e.structure = contact_with_last_xi(FV, e.model.frame);
    return e;
}

CatalogEntry heisenberg_1r(const ParamReader& pr) {
    const int r = pr.integer("r");
    if (r < 2) pr.fail("r must be >= 2");
    const std::string branch = pr.choice("branch", {"c8", "c9"});
    const int n = 2 * r + 1;

    Brackets br;
    for (int i = 0; i < r; ++i) br.emplace_back(i, 2 * r, r + i, 1.0);

    CatalogEntry e;
    Mat FV = Mat::Zero(2 * r, 2 * r);
    if (branch == "c8") {
        if (r % 2 != 0) pr.fail("branch c8 needs an even r (F restricted to each half must be a complex structure)");
        FV.topLeftCorner(r, r) = rotation_block(r / 2);
        FV.bottomRightCorner(r, r) = rotation_block(r / 2);
        e.expected_class = std::set<int>{8};
        e.expected_phi_class = std::set<int>{8};
    } else {
        FV.bottomLeftCorner(r, r) = Mat::Identity(r, r);
        FV.topRightCorner(r, r) = -Mat::Identity(r, r);
        e.expected_class = std::set<int>{9};
        e.expected_phi_class = std::set<int>{9};
    }
    e.description = "generalized Heisenberg group H(1,r) with xi = Z";
    e.model = FrameModel::from_brackets(Mat::Identity(n, n), br);
    e.structure = contact_with_last_xi(FV, e.model.frame);
    return e;
}

CatalogEntry e11(const ParamReader& pr) {
    const double lam = pr.real("lambda");
    if (!(lam > 0.0)) pr.fail("lambda must be > 0");
    const std::string xi = pr.choice("xi", {"X1", "X2", "X3"});

    CatalogEntry e;
    e.description = "rigid motions E(1,1) of the Minkowski plane";
    e.model = FrameModel::from_brackets(Mat::Identity(3, 3), {{2, 0, 0, -1.0 / lam}, {2, 1, 1, 1.0 / lam}});
    const int x = xi[1] - '1';
    const int a = (x + 1) % 3, b = (x + 2) % 3;
    Mat F = Mat::Zero(3, 3);
    F(b, a) = 1.0;
    F(a, b) = -1.0;
    e.structure = make_almost_contact(F, Vec::Unit(3, x), e.model.frame);
    if (xi == "X3") {
        e.expected_class = std::set<int>{9};
        e.expected_phi_class = std::set<int>{9};
    } else {
        e.expected_class = std::set<int>{11};
        e.expected_phi_class = std::set<int>{12};
    }
    return e;
}

CatalogEntry complex_group(const ParamReader& pr) {
    const std::string c = pr.choice("case", {"a", "b"});
    CatalogEntry e;
    e.description = "complex matrix group diffeomorphic to C^2 x R with xi = W";
    e.model = FrameModel::from_brackets(Mat::Identity(5, 5),
                                        {{4, 0, 2, 1.0}, {4, 1, 3, 1.0}, {4, 2, 0, -1.0}, {4, 3, 1, -1.0}});
    Mat FV = Mat::Zero(4, 4);
    if (c == "a") {
        // F = ad_W restricted to V.
        FV = e.model.ad.op(4).topLeftCorner(4, 4);
        e.expected_class = std::set<int>{};
        e.expected_phi_class = std::set<int>{};
    } else {
        Mat F1(4, 4), F2(4, 4);
        F1 << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, -1, 0;
        F2 << 0, 0, 0, -1, 0, 0, 1, 0, 0, -1, 0, 0, 1, 0, 0, 0;
        const double theta = pr.real("theta");
        if (std::abs(std::sin(theta)) < 1e-6 || std::abs(std::cos(theta)) < 1e-6)
            pr.fail("theta must avoid multiples of pi/2 so that both inequalities of case b hold");
        FV = std::cos(theta) * F1 + std::sin(theta) * F2;
        e.expected_class = std::set<int>{12};
        e.expected_phi_class = std::set<int>{11};
    }
    e.structure = contact_with_last_xi(FV, e.model.frame);
    return e;
}

CatalogEntry su2(const ParamReader&) {
    CatalogEntry e;
    e.description = "su(2) with the bi-invariant metric, xi = e3";
    e.model = FrameModel::from_brackets(Mat::Identity(3, 3), {{0, 1, 2, 1.0}, {1, 2, 0, 1.0}, {2, 0, 1, 1.0}});
    e.structure = contact_with_last_xi(rotation_block(1), e.model.frame);
    e.user_canonical = ConnectionCoeffs(3);
    e.expected_on3_class = std::set<int>{3};
    return e;
}

CatalogEntry heisenberg3(const ParamReader&) {
    CatalogEntry e;
    e.description = "three-dimensional Heisenberg group, xi = e3";
    e.model = FrameModel::from_brackets(Mat::Identity(3, 3), {{0, 1, 2, 1.0}});
    e.structure = contact_with_last_xi(rotation_block(1), e.model.frame);
    e.expected_class = std::set<int>{7};
    e.expected_phi_class = std::set<int>{6};
    return e;
}

CatalogEntry solvable_t1(const ParamReader& pr) {
    const int m = pr.integer("m");
    if (m < 1) pr.fail("m must be >= 1");
    const double alpha = pr.real("alpha");
    if (alpha == 0.0) pr.fail("alpha must be nonzero");
    const int n = 2 * m + 1;
    Brackets br;
    for (int i = 0; i < 2 * m; ++i) br.emplace_back(2 * m, i, i, -alpha);

    CatalogEntry e;
    e.description = "rank-one solvable algebra [zeta, E_i] = -alpha E_i, xi = zeta";
    e.model = FrameModel::from_brackets(Mat::Identity(n, n), br);
    e.structure = contact_with_last_xi(rotation_block(m), e.model.frame);
    e.expected_class = std::set<int>{10};
    e.expected_phi_class = std::set<int>{5};
    e.user_canonical = ConnectionCoeffs(n);
    e.expected_on3_class = std::set<int>{1};
    return e;
}

}  // namespace

const std::vector<CatalogInfo>& catalog_list() {
    static const std::vector<CatalogInfo> list = {
        {"heisenberg_p1",
         "generalized Heisenberg group H(p,1), xi = Z",
         {{"p", "2", "half of dim V (>= 1)"},
          {"branch", "lambda", "lambda | sum0 | generic"},
          {"lambda", "1", "value of the equal components F_i^{p+i} (+1 or -1)"}}},
        {"heisenberg_1r",
         "generalized Heisenberg group H(1,r), xi = Z",
         {{"r", "2", "dimension of the center (>= 2)"}, {"branch", "c8", "c8 | c9"}}},
        {"e11",
         "rigid motions of the Minkowski plane E(1,1)",
         {{"lambda", "1", "metric parameter (> 0)"}, {"xi", "X3", "X1 | X2 | X3"}}},
        {"complex_group",
         "complex matrix group on C^2 x R, xi = W",
         {{"case", "a", "a (cosymplectic) | b"}, {"theta", "0.6", "mixing angle for case b"}}},
        {"su2", "su(2) with the bi-invariant metric", {}},
        {"heisenberg3", "three-dimensional Heisenberg group", {}},
        {"solvable_t1",
         "rank-one solvable algebra with the alpha-Kenmotsu structure",
         {{"m", "1", "half of dim V (>= 1)"}, {"alpha", "1", "Kenmotsu constant (nonzero)"}}},
    };
    return list;
}

CatalogEntry catalog_load(const std::string& name, const CatalogParams& params) {
    const CatalogInfo& info = info_for(name);
    const ParamReader pr(name, params, info);
    CatalogEntry e;
    if (name == "heisenberg_p1") e = heisenberg_p1(pr);
    else if (name == "heisenberg_1r") e = heisenberg_1r(pr);
    else if (name == "e11") e = e11(pr);
    else if (name == "complex_group") e = complex_group(pr);
    else if (name == "su2") e = su2(pr);
    else if (name == "heisenberg3") e = heisenberg3(pr);
    else e = solvable_t1(pr);
    e.name = name;
    e.params = pr.resolved();
    return e;
}

std::vector<CatalogEntry> catalog_all_variants() {
    return {
        catalog_load("heisenberg_p1", {{"p", "2"}, {"branch", "lambda"}}),
        catalog_load("heisenberg_p1", {{"p", "2"}, {"branch", "lambda"}, {"lambda", "-1"}}),
        catalog_load("heisenberg_p1", {{"p", "2"}, {"branch", "sum0"}}),
        catalog_load("heisenberg_p1", {{"p", "3"}, {"branch", "generic"}}),
        catalog_load("heisenberg_1r", {{"r", "2"}, {"branch", "c8"}}),
        catalog_load("heisenberg_1r", {{"r", "2"}, {"branch", "c9"}}),
        catalog_load("heisenberg_1r", {{"r", "3"}, {"branch", "c9"}}),
        catalog_load("e11", {{"xi", "X1"}}),
        catalog_load("e11", {{"xi", "X2"}}),
        catalog_load("e11", {{"xi", "X3"}}),
        catalog_load("e11", {{"xi", "X3"}, {"lambda", "2.5"}}),
        catalog_load("complex_group", {{"case", "a"}}),
        catalog_load("complex_group", {{"case", "b"}}),
        catalog_load("su2"),
        catalog_load("heisenberg3"),
        catalog_load("solvable_t1"),
        catalog_load("solvable_t1", {{"m", "2"}, {"alpha", "0.75"}}),
    };
}

}  // namespace sg
