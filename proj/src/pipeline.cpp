#include "strucgeo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "strucgeo/qr_algebra.hpp"

namespace sg {

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

[[noreturn]] void parse_fail(const std::string& path, const std::string& msg) {
    throw Error(Errc::ParseError, (path.empty() ? std::string("<root>") : path) + ": " + msg);
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string child(const std::string& path, size_t index) { return path + "[" + std::to_string(index) + "]"; }

void require_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) parse_fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) parse_fail(child(path, it.key()), "unknown key");
}

double read_number(const Json& j, const std::string& path) {
    if (!j.is_number()) parse_fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) parse_fail(path, "number is not finite");
    return v;
}

int read_index(const Json& j, const std::string& path, int bound) {
    const double v = read_number(j, path);
    if (v != std::floor(v)) parse_fail(path, "expected an integer");
    if (v < 0 || v >= bound) parse_fail(path, "index out of range [0, " + std::to_string(bound) + ")");
    return static_cast<int>(v);
}

Vec read_vector(const Json& j, const std::string& path, int n) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        parse_fail(path, "expected an array of " + std::to_string(n) + " numbers");
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = read_number(j[static_cast<size_t>(i)], child(path, static_cast<size_t>(i)));
    return v;
}

Mat read_matrix(const Json& j, const std::string& path, int n) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        parse_fail(path, "expected " + std::to_string(n) + " rows of " + std::to_string(n) + " numbers");
    Mat m(n, n);
    for (int r = 0; r < n; ++r) m.row(r) = read_vector(j[static_cast<size_t>(r)], child(path, static_cast<size_t>(r)), n).transpose();
    return m;
}

std::optional<TaxonomyId> taxonomy_from_string(const std::string& s) {
    if (s == "on3") return TaxonomyId::ON3;
    if (s == "gh") return TaxonomyId::GH4;
    if (s == "acms") return TaxonomyId::ACMS12;
    return std::nullopt;
}

const char* taxonomy_short(TaxonomyId id) {
    switch (id) {
        case TaxonomyId::ON3: return "on3";
        case TaxonomyId::GH4: return "gh";
        default: return "acms";
    }
}

StructureTensor read_structure(const Json& j, const std::string& path, const FrameMetric& frame) {
    require_keys(j, path, {"kind", "components", "params"});
    if (!j.contains("kind") || !j["kind"].is_string()) parse_fail(child(path, "kind"), "expected a string");
    if (!j.contains("components")) parse_fail(child(path, "components"), "missing");
    const std::string kind = j["kind"].get<std::string>();
    const Json& c = j["components"];
    const std::string cp = child(path, "components");
    const int n = frame.dim();
    const bool has_params = j.contains("params");
    if (has_params && kind != "sigma_affinor") require_keys(j["params"], child(path, "params"), {});

    if (kind == "almost_product") {
        require_keys(c, cp, {"P"});
        if (!c.contains("P")) parse_fail(child(cp, "P"), "missing");
        return AlmostProduct{read_matrix(c["P"], child(cp, "P"), n)};
    }
    if (kind == "almost_hermitian") {
        require_keys(c, cp, {"J"});
        if (!c.contains("J")) parse_fail(child(cp, "J"), "missing");
        return AlmostHermitian{read_matrix(c["J"], child(cp, "J"), n)};
    }
    if (kind == "f_structure") {
        require_keys(c, cp, {"F"});
        if (!c.contains("F")) parse_fail(child(cp, "F"), "missing");
        return FStructure{read_matrix(c["F"], child(cp, "F"), n)};
    }
    if (kind == "almost_contact") {
        require_keys(c, cp, {"F", "xi"});
        if (!c.contains("F")) parse_fail(child(cp, "F"), "missing");
        if (!c.contains("xi")) parse_fail(child(cp, "xi"), "missing");
        return make_almost_contact(read_matrix(c["F"], child(cp, "F"), n), read_vector(c["xi"], child(cp, "xi"), n),
                                   frame);
    }
    if (kind == "sigma_affinor") {
        require_keys(c, cp, {"S"});
        if (!c.contains("S")) parse_fail(child(cp, "S"), "missing");
        SigmaAffinor s{read_matrix(c["S"], child(cp, "S"), n), std::nullopt};
        if (has_params) {
            const std::string pp = child(path, "params");
            require_keys(j["params"], pp, {"order"});
            if (j["params"].contains("order")) {
                const double o = read_number(j["params"]["order"], child(pp, "order"));
                if (o != std::floor(o) || o < 2) parse_fail(child(pp, "order"), "expected an integer >= 2");
                s.order = static_cast<int>(o);
            }
        }
        return s;
    }
    parse_fail(child(path, "kind"), "unknown structure kind '" + kind + "'");
}

Json matrix_json(const Mat& m) {
    Json rows = Json::array();
    for (int r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json tensor_json(const Tensor3& t) {
    const int n = t.dim();
    Json a = Json::array();
    for (int i = 0; i < n; ++i) {
        Json b = Json::array();
        for (int j = 0; j < n; ++j) {
            Json c = Json::array();
            for (int k = 0; k < n; ++k) c.push_back(t(i, j, k));
            b.push_back(std::move(c));
        }
        a.push_back(std::move(b));
    }
    return a;
}

Json connection_json(const ConnectionCoeffs& c) {
    Json a = Json::array();
    for (int i = 0; i < c.dim(); ++i) a.push_back(matrix_json(c.op(i)));
    return a;
}

Json structure_json(const StructureTensor& s) {
    Json j;
    j["kind"] = kind_name(kind_of(s));
    Json c = Json::object();
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AlmostProduct>) c["P"] = matrix_json(v.P);
            if constexpr (std::is_same_v<T, AlmostHermitian>) c["J"] = matrix_json(v.J);
            if constexpr (std::is_same_v<T, FStructure>) c["F"] = matrix_json(v.F);
            if constexpr (std::is_same_v<T, AlmostContact>) {
                c["F"] = matrix_json(v.F);
                c["xi"] = vector_json(v.xi);
            }
            if constexpr (std::is_same_v<T, SigmaAffinor>) {
                c["S"] = matrix_json(v.S);
                if (v.order) j["params"]["order"] = *v.order;
            }
        },
        s);
    j["components"] = std::move(c);
    return j;
}

Json set_json(TaxonomyId id, const std::set<int>& s) {
    Json a = Json::array();
    for (int i : s) a.push_back(class_label(id, {i}));
    return a;
}

Json class_report_json(const ClassReport& r, int n) {
    Json j;
    j["taxonomy"] = taxonomy_name(r.taxonomy);
    j["n"] = n;
    j["membership"] = set_json(r.taxonomy, r.membership);
    j["label"] = class_label(r.taxonomy, r.membership);
    Json norms = Json::object();
    for (const auto& [i, v] : r.component_norms) norms[class_label(r.taxonomy, {i})] = v;
    j["component_norms"] = std::move(norms);
    j["norm"] = r.norm;
    j["ambient_residual"] = r.ambient_residual;
    j["tol_rel"] = r.tol_rel;
    if (r.taxonomy != TaxonomyId::ACMS12C) {
        j["strict"] = r.strict;
        j["r1_min_eigenvalue"] = r.r1_min_eigenvalue;
    }
    j["named_classes"] = named_classes(r);
    return j;
}

bool is_validation_error(Errc c) {
    switch (c) {
        case Errc::InputShape:
        case Errc::NotOrthogonal:
        case Errc::NotPSD:
        case Errc::StructureInvalid:
        case Errc::SingularOneMinusS:
        case Errc::SingularAffinor:
        case Errc::DegenerateDimension:
        case Errc::UnsupportedSpectrum:
        case Errc::UnknownCatalogEntry:
        case Errc::InvalidParams:
        case Errc::ParseError: return true;
        default: return false;
    }
}

/// Collects identity residuals against their tolerances.
class Checks {
public:
    void add(const std::string& name, double value, double tol) {
        const bool ok = std::isfinite(value) && value <= tol;
        json_[name] = Json{{"value", value}, {"tol", tol}, {"ok", ok}};
        if (!ok) failures_.push_back(name);
    }
    void fail(const std::string& name) { failures_.push_back(name); }
    const Json& json() const { return json_; }
    const std::vector<std::string>& failures() const { return failures_; }

private:
    Json json_ = Json::object();
    std::vector<std::string> failures_;
};

void finish(Report& r, const Checks& checks) {
    r.body["residuals"] = checks.json();
    r.body["failures"] = checks.failures();
    r.ok = checks.failures().empty();
    r.exit_code = r.ok ? ExitCode::Ok : ExitCode::Tripwire;
    r.body["status"] = r.ok ? "OK" : "FAILED";
    r.body["exit_code"] = static_cast<int>(r.exit_code);
}

void abort_with(Report& r, ExitCode code, const std::string& kind, const std::string& message,
                const std::string& check = "") {
    Json e{{"code", kind}, {"message", message}};
    if (!check.empty()) e["check"] = check;
    r.body["error"] = std::move(e);
    r.body["status"] = "FAILED";
    r.body["exit_code"] = static_cast<int>(code);
    r.ok = false;
    r.exit_code = code;
}

void abort_with(Report& r, const Error& e) {
    const ExitCode code = is_validation_error(e.code()) ? ExitCode::ValidationFailure : ExitCode::Tripwire;
    abort_with(r, code, errc_name(e.code()), e.what(),
               e.check() == StructureCheck::None ? "" : structure_check_name(e.check()));
}

Mat curvature_along(const Curvature& R, const Vec& x, const Vec& y) {
    Mat out = Mat::Zero(R.n, R.n);
    for (int i = 0; i < R.n; ++i)
        for (int j = 0; j < R.n; ++j)
            if (x(i) != 0.0 && y(j) != 0.0) out += x(i) * y(j) * R.at(i, j);
    return out;
}

/// max over orthonormal pairs of |<(R - Rbar)_{XY} Y, X> - |h_X Y|^2|.
double reductive_curvature_residual(const FrameModel& model, const ConnectionCoeffs& nabla,
                                    const ConnectionCoeffs& nabla_bar, const Tensor3& h) {
    const FrameMetric& f = model.frame;
    const Curvature R = riemann_curvature(nabla, model);
    const Curvature Rb = riemann_curvature(nabla_bar, model);
    const BilinearOps H = h_operators(h, f);
    double worst = 0.0;
    for (int a = 0; a < f.dim(); ++a)
        for (int b = 0; b < f.dim(); ++b) {
            if (a == b) continue;
            const Vec x = f.onb().col(a), y = f.onb().col(b);
            const double lhs = f.inner((curvature_along(R, x, y) - curvature_along(Rb, x, y)) * y, x);
            const Vec hxy = H.apply(x, y);
            worst = std::max(worst, std::abs(lhs - f.inner(hxy, hxy)));
        }
    return worst;
}

/// QR-algebra data of a nearly particular h with canonical connection nabla_bar.
Json qr_section(const std::string& prefix, const FrameModel& model, const ConnectionCoeffs& nabla,
                const ConnectionCoeffs& nabla_bar, const Tensor3& h, double scale, const ResidualTolerances& tol,
                Checks& checks) {
    const FrameMetric& f = model.frame;
    Json j;
    const double sym = split_sym_skew(h).first.max_abs();
    j["symmetric_part"] = sym;
    j["nearly_particular"] = sym <= 1e-10;
    if (sym > 1e-10) return j;

    const QRAlgebra alg = from_h(h, f);
    const QRAxioms ax = check_axioms(alg);
    j["axioms"] = Json{{"anticommutativity", ax.anticommutativity}, {"invariance", ax.invariance}, {"ok", ax.ok()}};
    checks.add(prefix + ".axioms", std::max(ax.anticommutativity, ax.invariance), tol.qr * scale);

    const Endo A = fundamental_operator(alg);
    j["fundamental_operator"] = matrix_json(A);
    const RicciLike rl = ricci_like_invariants(h, f);
    checks.add(prefix + ".fundamental_vs_r1", max_abs(A - rl.r1), tol.qr * scale * scale);

    const IdealDecomposition d = ideal_decompose(alg);
    Json eig = Json::array();
    for (const EigenSpace& e : d.eigen_data)
        eig.push_back(Json{{"lambda", e.lambda}, {"multiplicity", static_cast<int>(e.basis.cols())}});
    j["eigenvalues"] = std::move(eig);
    j["abelian_dim"] = static_cast<int>(d.abelian.cols());
    Json ideals = Json::array();
    for (const Mat& I : d.ideals) ideals.push_back(static_cast<int>(I.cols()));
    j["simple_ideal_dims"] = std::move(ideals);
    checks.add(prefix + ".cross_products", cross_product_residual(alg, d), tol.qr * scale);
    const bool qra = is_qra(alg, d);
    j["qra"] = qra;
    if (qra) {
        const double c = commutation_residual(alg, A);
        j["commutation_residual"] = c;
        checks.add(prefix + ".commutation", c, tol.qr * std::max(1.0, max_abs(A) * alg.mult.max_abs()));
    }

    const QuasiHomogeneity qh = quasi_homogeneity(h, nabla_bar, f);
    j["quasi_homogeneity_residual"] = qh.residual;
    const double red = reductive_curvature_residual(model, nabla, nabla_bar, h);
    j["reductive_curvature_residual"] = red;
    if (qh.residual <= 1e-10 * scale * scale) checks.add(prefix + ".reductive_curvature", red, tol.curvature * scale * scale);
    return j;
}

void compare_expected(Json& out, Checks& checks, const std::string& key, TaxonomyId id,
                      const std::optional<std::set<int>>& expected, const ClassReport* actual) {
    if (!expected) return;
    Json e{{"expected", set_json(id, *expected)}};
    const bool match = actual && actual->membership == *expected;
    e["actual"] = actual ? set_json(id, actual->membership) : Json(nullptr);
    e["match"] = match;
    out[key] = std::move(e);
    if (!match) checks.fail("expected." + key);
}

void format_double(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    out += s;
}

void write_canonical(std::string& out, const Json& j) {
    switch (j.type()) {
        case Json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += Json(it.key()).dump();
                out += ':';
                write_canonical(out, it.value());
            }
            out += '}';
            break;
        }
        case Json::value_t::array: {
            out += '[';
            for (size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                write_canonical(out, j[i]);
            }
            out += ']';
            break;
        }
        case Json::value_t::number_float: format_double(out, j.get<double>()); break;
        default: out += j.dump(); break;
    }
}

}  // namespace

FrameModel GeometryFile::model() const {
    std::vector<std::tuple<int, int, int, double>> c;
    c.reserve(bracket.size());
    for (const BracketEntry& b : bracket) c.emplace_back(b.i, b.j, b.k, b.value);
    return FrameModel::from_brackets(gram, c);
}

GeometryFile parse_geometry(const std::string& text) {
    std::vector<std::set<std::string>> open_keys;
    std::vector<std::string> key_stack;
    const Json::parser_callback_t cb = [&](int, Json::parse_event_t ev, Json& parsed) {
        if (ev == Json::parse_event_t::object_start) open_keys.emplace_back();
        if (ev == Json::parse_event_t::object_end) open_keys.pop_back();
        if (ev == Json::parse_event_t::key) {
            const std::string k = parsed.get<std::string>();
            if (!open_keys.back().insert(k).second) parse_fail(k, "duplicate key");
        }
        return true;
    };
    Json j;
    try {
        j = Json::parse(text, cb);
    } catch (const Json::parse_error& e) {
        const size_t upto = std::min(static_cast<size_t>(e.byte), text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }

    require_keys(j, "", {"dim", "gram", "bracket", "structure", "taxonomy", "tolerances", "canonical", "description"});
    GeometryFile gf;
    if (!j.contains("dim")) parse_fail("dim", "missing");
    const double dim = read_number(j["dim"], "dim");
    if (dim != std::floor(dim) || dim < 1 || dim > 64) parse_fail("dim", "expected an integer in [1, 64]");
    gf.dim = static_cast<int>(dim);
    const int n = gf.dim;
    gf.gram = j.contains("gram") ? read_matrix(j["gram"], "gram", n) : Mat::Identity(n, n);
    if (j.contains("description") && !j["description"].is_string()) parse_fail("description", "expected a string");

    if (j.contains("bracket")) {
        const Json& b = j["bracket"];
        if (!b.is_array()) parse_fail("bracket", "expected an array of [i, j, k, value] entries");
        std::set<std::tuple<int, int, int>> seen;
        for (size_t t = 0; t < b.size(); ++t) {
            const std::string p = child("bracket", t);
            if (!b[t].is_array() || b[t].size() != 4) parse_fail(p, "expected [i, j, k, value]");
            BracketEntry e{read_index(b[t][0], child(p, size_t{0}), n), read_index(b[t][1], child(p, size_t{1}), n),
                           read_index(b[t][2], child(p, size_t{2}), n), read_number(b[t][3], child(p, size_t{3}))};
            if (e.i >= e.j) parse_fail(p, "bracket entries store only i < j");
            if (!seen.insert({e.i, e.j, e.k}).second) parse_fail(p, "duplicate structure constant");
            gf.bracket.push_back(e);
        }
    }

    if (!j.contains("structure")) parse_fail("structure", "missing");
    FrameMetric frame;
    try {
        frame = FrameMetric(gf.gram);
    } catch (const Error& e) {
        parse_fail("gram", e.what());
    }
    gf.structure = read_structure(j["structure"], "structure", frame);

    if (j.contains("taxonomy")) {
        if (!j["taxonomy"].is_string()) parse_fail("taxonomy", "expected one of on3, gh, acms");
        gf.taxonomy = taxonomy_from_string(j["taxonomy"].get<std::string>());
        if (!gf.taxonomy) parse_fail("taxonomy", "expected one of on3, gh, acms");
    }
    if (j.contains("tolerances")) {
        require_keys(j["tolerances"], "tolerances", {"tol_rel"});
        if (j["tolerances"].contains("tol_rel")) {
            const double t = read_number(j["tolerances"]["tol_rel"], "tolerances.tol_rel");
            if (!(t > 0 && t < 1)) parse_fail("tolerances.tol_rel", "expected a value in (0, 1)");
            gf.tol_rel = t;
        }
    }
    if (j.contains("canonical")) {
        const Json& c = j["canonical"];
        if (!c.is_array() || static_cast<int>(c.size()) != n)
            parse_fail("canonical", "expected " + std::to_string(n) + " connection matrices");
        ConnectionCoeffs conn(n);
        for (int i = 0; i < n; ++i)
            conn.op(i) = read_matrix(c[static_cast<size_t>(i)], child("canonical", static_cast<size_t>(i)), n);
        gf.canonical = std::move(conn);
    }
    return gf;
}

GeometryFile geometry_from_catalog(const CatalogEntry& entry) {
    GeometryFile gf;
    const int n = entry.model.dim();
    gf.dim = n;
    gf.gram = entry.model.frame.gram();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double v = entry.model.ad.coeff(i, j, k);
                if (v != 0.0) gf.bracket.push_back({i, j, k, v});
            }
    gf.structure = entry.structure;
    gf.canonical = entry.user_canonical;
    gf.catalog_name = entry.name;
    gf.catalog_params = entry.params;
    gf.expected_class = entry.expected_class;
    gf.expected_phi_class = entry.expected_phi_class;
    gf.expected_on3_class = entry.expected_on3_class;
    return gf;
}

Json geometry_to_json(const GeometryFile& gf) {
    Json j;
    j["dim"] = gf.dim;
    j["gram"] = matrix_json(gf.gram);
    Json b = Json::array();
    for (const BracketEntry& e : gf.bracket) b.push_back(Json{e.i, e.j, e.k, e.value});
    j["bracket"] = std::move(b);
    j["structure"] = structure_json(gf.structure);
    if (gf.taxonomy) j["taxonomy"] = taxonomy_short(*gf.taxonomy);
    if (gf.tol_rel) j["tolerances"]["tol_rel"] = *gf.tol_rel;
    if (gf.canonical) j["canonical"] = connection_json(*gf.canonical);
    return j;
}

Report run_validation(const GeometryFile& gf) {
    Report r;
    r.body["input"] = geometry_to_json(gf);
    try {
        const FrameModel model = gf.model();
        const LieDiagnostics lie = validate_lie(model);
        r.body["validation"]["lie"] =
            Json{{"antisymmetry", lie.antisymmetry}, {"jacobi", lie.jacobi}, {"ok", lie.ok()}};
        if (!lie.ok()) {
            abort_with(r, ExitCode::ValidationFailure, "LieIdentity", "brackets violate antisymmetry or Jacobi");
            return r;
        }
        const DecoratedStructure ds = validate_structure(gf.structure, model.frame);
        r.body["validation"]["structure"] = Json{{"kind", kind_name(ds.kind)}, {"half_dim", ds.half_dim}, {"ok", true}};
    } catch (const Error& e) {
        abort_with(r, e);
        return r;
    }
    finish(r, Checks{});
    return r;
}

Report run_pipeline(const GeometryFile& gf, const RunOptions& options) {
    Report r = run_validation(gf);
    if (!r.ok) return r;
    Json& b = r.body;
    if (gf.catalog_name) {
        b["catalog"]["name"] = *gf.catalog_name;
        Json p = Json::object();
        for (const auto& [k, v] : gf.catalog_params) p[k] = v;
        b["catalog"]["params"] = std::move(p);
    }
    Checks checks;
    const ResidualTolerances& tol = options.tolerances;
    try {
        const FrameModel model = gf.model();
        const FrameMetric& f = model.frame;
        const DecoratedStructure ds = validate_structure(gf.structure, f);
        const double tol_rel = options.tol_rel.value_or(gf.tol_rel.value_or(kDefaultTolRel));
        const double s1 = std::max(1.0, model.ad.max_abs());
        const double s2 = s1 * s1;

        const ConnectionCoeffs nabla = levi_civita(model);
        const ConnectionCoeffs nabla_bar = canonical_connection(ds, nabla);
        b["connections"]["levi_civita"] = connection_json(nabla);
        b["connections"]["canonical"] = connection_json(nabla_bar);
        const Tensor3 h = second_fundamental(ds, nabla);
        const auto [hsym, hskew] = split_sym_skew(h);
        b["h"] = Json{{"components", tensor_json(h)},
                      {"max_abs", h.max_abs()},
                      {"symmetric_max_abs", hsym.max_abs()},
                      {"skew_max_abs", hskew.max_abs()}};

        checks.add("torsion", (torsion_bar(h, f) - torsion(nabla_bar, model)).max_abs(), tol.torsion * s1);
        checks.add("curvature", curvature_relation_check(model, nabla, nabla_bar, h), tol.curvature * s2);
        checks.add("metric", metric_residual(nabla_bar, f), tol.metric * s1);
        checks.add("parallel", structure_parallel_residual(ds, nabla_bar), tol.parallel * s1);
        checks.add("family", family_symmetry_residual(ds, h), tol.family * s1);
        checks.add("closed_form", (second_fundamental_closed(ds, nabla) - h).max_abs(), tol.closed_form * s1);

        const RicciLike rl = ricci_like_invariants(h, f);
        b["ricci_like"] = Json{{"r1", matrix_json(rl.r1)},
                               {"r2", matrix_json(rl.r2)},
                               {"kernel_dim", static_cast<int>(rl.ker_r1_basis.cols())},
                               {"min_eigenvalue", rl.min_eigenvalue}};
        const QuasiHomogeneity qh = quasi_homogeneity(h, nabla_bar, f);
        b["quasi_homogeneity"] = Json{{"residual", qh.residual},
                                      {"r1_residual", qh.r1_residual},
                                      {"r2_residual", qh.r2_residual},
                                      {"quasi_homogeneous", qh.quasi_homogeneous(1e-10 * s2)}};

        const TaxonomyId natural = taxonomy_for(ds.kind);
        const std::optional<TaxonomyId> requested = options.taxonomy ? options.taxonomy : gf.taxonomy;
        std::vector<TaxonomyId> ids;
        if (requested) {
            ids.push_back(*requested);
        } else {
            ids.push_back(natural);
            if (natural != TaxonomyId::ON3) ids.push_back(TaxonomyId::ON3);
        }

        Json tax = Json::object();
        std::optional<ClassReport> acms, acms_phi;
        for (TaxonomyId id : ids) {
            const ClassReport rep = classify_structure(ds, h, id, tol_rel);
            tax[taxonomy_name(id)] = class_report_json(rep, taxonomy_param(ds, id));
            if (id == TaxonomyId::ACMS12) acms = rep;
        }
        b["classes_requested"] = Json::array();
        for (TaxonomyId id : ids) b["classes_requested"].push_back(taxonomy_name(id));

        if (ds.kind == StructureKind::AlmostContact) {
            const AcmsForms forms = acms_forms(ds, nabla);
            const AcmsIdentities ai = acms_identities(ds, h, forms);
            checks.add("acms_identities", ai.max(), tol.acms * s2);
            const NTensors direct = n_tensors_direct(ds, model);
            const NTensors via_h = n_tensors_from_h(ds, h);
            checks.add("n_tensors", n_tensor_difference(direct, via_h), tol.n_tensors * s2);
            b["n_tensors"] = Json{{"N1_max_abs", direct.N1.max_abs()},
                                  {"N2_max_abs", max_abs(direct.N2)},
                                  {"N3_max_abs", max_abs(direct.N3)},
                                  {"N4_max_abs", max_abs(direct.N4)}};
            if (acms) {
                acms_phi = classify_acms_phi(ds, forms, tol_rel);
                tax[taxonomy_name(TaxonomyId::ACMS12C)] = class_report_json(*acms_phi, ds.half_dim);
                const bool agree = cross_check_isomorphism(*acms, *acms_phi);
                tax["cross_check"] = agree;
                if (!agree) checks.fail("cross_check");
                const SpecialFlags flags = recognize_special(ds, h, forms, *acms);
                Json fl = Json::object();
                for (const auto& [k, v] : flags.as_map()) {
                    if (k.rfind("alpha_", 0) == 0) fl[k] = v;
                    else fl[k] = v != 0.0;
                }
                b["special_flags"] = std::move(fl);
            }
        } else if (ds.kind == StructureKind::AlmostHermitian) {
            b["n_tensors"] = Json{{"N_max_abs", nijenhuis(ds.tensor, model).max_abs()}};
        }
        b["taxonomies"] = std::move(tax);

        Json qr = Json::object();
        if (h.max_abs() > kZeroNorm && hsym.max_abs() <= 1e-10)
            qr["structure"] = qr_section("qr.structure", model, nabla, nabla_bar, h, s1, tol, checks);
        std::optional<ClassReport> user_on3;
        if (gf.canonical) {
            if (gf.canonical->dim() != f.dim()) throw Error(Errc::InputShape, "canonical connection has the wrong size");
            if (metric_residual(*gf.canonical, f) > tol.metric * s1)
                throw Error(Errc::InputShape, "canonical connection is not metric");
            const Tensor3 hu = second_fundamental_from(f, nabla, *gf.canonical);
            const auto on3 = shared_taxonomy(TaxonomyId::ON3, f.dim());
            user_on3 = classify(pullback(hu, f.onb()), *on3, tol_rel);
            Json u = qr_section("qr.user", model, nabla, *gf.canonical, hu, s1, tol, checks);
            u["h"] = tensor_json(hu);
            u["on3"] = class_report_json(*user_on3, f.dim());
            checks.add("qr.user.curvature", curvature_relation_check(model, nabla, *gf.canonical, hu),
                       tol.curvature * s2);
            qr["user"] = std::move(u);
        }
        if (!qr.empty()) b["qr_algebra"] = std::move(qr);

        Json expected = Json::object();
        compare_expected(expected, checks, "class", TaxonomyId::ACMS12, gf.expected_class, acms ? &*acms : nullptr);
        compare_expected(expected, checks, "phi_class", TaxonomyId::ACMS12C, gf.expected_phi_class,
                         acms_phi ? &*acms_phi : nullptr);
        compare_expected(expected, checks, "on3_class", TaxonomyId::ON3, gf.expected_on3_class,
                         user_on3 ? &*user_on3 : nullptr);
        if (!expected.empty()) b["expected"] = std::move(expected);
    } catch (const Error& e) {
        b["residuals"] = checks.json();
        abort_with(r, e);
        return r;
    }
    finish(r, checks);
    return r;
}

std::string canonical_json(const Json& j) {
    std::string out;
    write_canonical(out, j);
    return out;
}

std::string report_text(const Report& r) {
    const Json& b = r.body;
    std::ostringstream os;
    os << "status: " << b.value("status", "?") << " (exit " << static_cast<int>(r.exit_code) << ")\n";
    if (b.contains("catalog")) os << "catalog: " << b["catalog"]["name"].get<std::string>() << "\n";
    if (b.contains("validation") && b["validation"].contains("structure"))
        os << "structure: " << b["validation"]["structure"]["kind"].get<std::string>() << ", dim "
           << b["input"]["dim"].get<int>() << "\n";
    if (b.contains("error"))
        os << "error: " << b["error"]["code"].get<std::string>() << ": " << b["error"]["message"].get<std::string>()
           << "\n";
    if (b.contains("taxonomies")) {
        for (auto it = b["taxonomies"].begin(); it != b["taxonomies"].end(); ++it) {
            if (!it->is_object()) continue;
            os << it.key() << ": " << (*it)["label"].get<std::string>();
            const auto names = (*it)["named_classes"].get<std::vector<std::string>>();
            if (!names.empty()) {
                os << " (";
                for (size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
                os << ")";
            }
            os << "\n";
        }
        if (b["taxonomies"].contains("cross_check"))
            os << "cross_check: " << (b["taxonomies"]["cross_check"].get<bool>() ? "agree" : "DISAGREE") << "\n";
    }
    if (b.contains("special_flags")) {
        os << "flags:";
        for (auto it = b["special_flags"].begin(); it != b["special_flags"].end(); ++it) {
            if (it->is_boolean() && it->get<bool>()) os << " " << it.key();
            if (it->is_number_float()) os << " " << it.key() << "=" << it->get<double>();
        }
        os << "\n";
    }
    if (b.contains("quasi_homogeneity"))
        os << "quasi_homogeneous: " << (b["quasi_homogeneity"]["quasi_homogeneous"].get<bool>() ? "yes" : "no")
           << " (residual " << b["quasi_homogeneity"]["residual"].get<double>() << ")\n";
    if (b.contains("qr_algebra")) {
        for (auto it = b["qr_algebra"].begin(); it != b["qr_algebra"].end(); ++it) {
            const Json& q = *it;
            os << "qr_algebra." << it.key() << ":";
            if (q.contains("on3")) os << " on3=" << q["on3"]["label"].get<std::string>();
            if (!q["nearly_particular"].get<bool>()) {
                os << " not nearly particular\n";
                continue;
            }
            os << " abelian_dim=" << q["abelian_dim"].get<int>() << " simple_ideals=" << q["simple_ideal_dims"].size()
               << " qra=" << (q["qra"].get<bool>() ? "true" : "false") << "\n";
        }
    }
    if (b.contains("expected"))
        for (auto it = b["expected"].begin(); it != b["expected"].end(); ++it)
            os << "expected " << it.key() << ": " << ((*it)["match"].get<bool>() ? "match" : "MISMATCH") << "\n";
    if (b.contains("residuals")) {
        for (auto it = b["residuals"].begin(); it != b["residuals"].end(); ++it) {
            char line[160];
            std::snprintf(line, sizeof line, "  %-28s %.3e <= %.1e %s\n", it.key().c_str(),
                          (*it)["value"].get<double>(), (*it)["tol"].get<double>(),
                          (*it)["ok"].get<bool>() ? "ok" : "FAIL");
            os << line;
        }
    }
    return os.str();
}

std::optional<double> env_tol_rel() {
    const char* v = std::getenv("STRUCGEO_TOL_REL");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const double t = std::strtod(v, &end);
    if (end == v || *end != '\0' || !(t > 0 && t < 1)) return std::nullopt;
    return t;
}

}  // namespace sg
