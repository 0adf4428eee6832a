#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "strucgeo/pipeline.hpp"

namespace {

using sg::ExitCode;

struct OutputFlags {
    bool json = false;
    bool text = false;
};

void add_output_flags(CLI::App* cmd, OutputFlags& out) {
    auto* j = cmd->add_flag("--json", out.json, "Emit the canonical JSON report");
    auto* t = cmd->add_flag("--text", out.text, "Emit a human-readable summary (default)");
    j->excludes(t);
}

int emit(const sg::Report& r, const OutputFlags& out) {
    if (out.json)
        std::cout << sg::canonical_json(r.body) << "\n";
    else
        std::cout << sg::report_text(r);
    return static_cast<int>(r.exit_code);
}

int emit_error(const sg::Error& e, const OutputFlags& out) {
    sg::Report r;
    r.body["status"] = "FAILED";
    r.body["error"] = {{"code", sg::errc_name(e.code())}, {"message", e.what()}};
    r.exit_code = ExitCode::ValidationFailure;
    r.body["exit_code"] = static_cast<int>(r.exit_code);
    return emit(r, out);
}

bool read_file(const std::string& path, std::string& text) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    return true;
}

std::optional<sg::TaxonomyId> taxonomy_option(const std::string& s) {
    if (s == "on3") return sg::TaxonomyId::ON3;
    if (s == "gh") return sg::TaxonomyId::GH4;
    if (s == "acms") return sg::TaxonomyId::ACMS12;
    return std::nullopt;
}

sg::RunOptions run_options(const std::string& taxonomy, double tol) {
    sg::RunOptions o;
    o.taxonomy = taxonomy_option(taxonomy);
    if (tol > 0)
        o.tol_rel = tol;
    else if (auto env = sg::env_tol_rel())
        o.tol_rel = env;
    return o;
}

int load_file(const std::string& path, sg::GeometryFile& gf, const OutputFlags& out) {
    std::string text;
    if (!read_file(path, text)) {
        std::cerr << "strucgeo: cannot open " << path << "\n";
        return static_cast<int>(ExitCode::NoInput);
    }
    try {
        gf = sg::parse_geometry(text);
    } catch (const sg::Error& e) {
        std::cerr << "strucgeo: " << path << ": " << e.what() << "\n";
        return emit_error(e, out);
    }
    return 0;
}

int selftest() {
    int failures = 0;
    for (const sg::CatalogEntry& e : sg::catalog_all_variants()) {
        const sg::Report r = sg::run_pipeline(sg::geometry_from_catalog(e));
        std::string params;
        for (const auto& [k, v] : e.params) params += (params.empty() ? "" : ",") + k + "=" + v;
        std::printf("%-4s %s(%s)\n", r.ok ? "ok" : "FAIL", e.name.c_str(), params.c_str());
        if (!r.ok) {
            ++failures;
            std::cout << sg::report_text(r);
        }
    }
    for (sg::TaxonomyId id : {sg::TaxonomyId::ON3, sg::TaxonomyId::GH4, sg::TaxonomyId::ACMS12, sg::TaxonomyId::ACMS12C}) {
        const int lo = id == sg::TaxonomyId::ON3 ? 2 : 1;
        const int hi = id == sg::TaxonomyId::ON3 ? 4 : 2;
        for (int n = lo; n <= hi; ++n) {
            bool ok = true;
            try {
                sg::shared_taxonomy(id, n);
            } catch (const sg::Error& err) {
                ok = false;
                std::cout << err.what() << "\n";
            }
            std::printf("%-4s taxonomy %s n=%d\n", ok ? "ok" : "FAIL", sg::taxonomy_name(id), n);
            if (!ok) ++failures;
        }
    }
    std::printf("selftest: %d failure(s)\n", failures);
    return failures ? static_cast<int>(ExitCode::Tripwire) : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classification of left-invariant structures on metric Lie algebras"};
    app.require_subcommand(1);

    OutputFlags out;
    std::string file, taxonomy, name;
    double tol = 0.0;
    std::vector<std::string> params;

    auto* validate = app.add_subcommand("validate", "Check the Lie identities and the structure tensor of a file");
    validate->add_option("file", file, "Geometry file")->required();
    add_output_flags(validate, out);

    auto* classify = app.add_subcommand("classify", "Run the full pipeline on a geometry file");
    classify->add_option("file", file, "Geometry file")->required();
    classify->add_option("--taxonomy", taxonomy, "Taxonomy: on3, gh or acms")
        ->check(CLI::IsMember({"on3", "gh", "acms"}));
    classify->add_option("--tol", tol, "Relative membership tolerance")->check(CLI::Range(1e-300, 1.0));
    add_output_flags(classify, out);

    auto* catalog = app.add_subcommand("catalog", "Built-in example geometries");
    catalog->require_subcommand(1);
    auto* list = catalog->add_subcommand("list", "List catalog entries and their parameters");
    auto* run = catalog->add_subcommand("run", "Run the pipeline on a catalog entry");
    run->add_option("name", name, "Entry name")->required();
    run->add_option("--param", params, "Parameter as key=value (repeatable)");
    run->add_option("--taxonomy", taxonomy, "Taxonomy: on3, gh or acms")->check(CLI::IsMember({"on3", "gh", "acms"}));
    run->add_option("--tol", tol, "Relative membership tolerance")->check(CLI::Range(1e-300, 1.0));
    add_output_flags(run, out);

    auto* self = app.add_subcommand("selftest", "Run every catalog entry and taxonomy build through the checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return static_cast<int>(ExitCode::Usage);
    }

    if (std::getenv("STRUCGEO_TOL_REL") && !sg::env_tol_rel()) {
        std::cerr << "strucgeo: STRUCGEO_TOL_REL must be a number in (0, 1)\n";
        return static_cast<int>(ExitCode::Usage);
    }

    if (*validate || *classify) {
        sg::GeometryFile gf;
        if (int rc = load_file(file, gf, out)) return rc;
        if (*validate) return emit(sg::run_validation(gf), out);
        return emit(sg::run_pipeline(gf, run_options(taxonomy, tol)), out);
    }
    if (*list) {
        for (const sg::CatalogInfo& info : sg::catalog_list()) {
            std::cout << info.name << "  " << info.description << "\n";
            for (const sg::CatalogParamSpec& p : info.params)
                std::cout << "    --param " << p.key << "=" << p.default_value << "  " << p.help << "\n";
        }
        return 0;
    }
    if (*run) {
        sg::CatalogParams cp;
        for (const std::string& kv : params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                std::cerr << "strucgeo: --param expects key=value, got '" << kv << "'\n";
                return static_cast<int>(ExitCode::Usage);
            }
            cp[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        try {
            const sg::CatalogEntry entry = sg::catalog_load(name, cp);
            return emit(sg::run_pipeline(sg::geometry_from_catalog(entry), run_options(taxonomy, tol)), out);
        } catch (const sg::Error& e) {
            std::cerr << "strucgeo: " << e.what() << "\n";
            return emit_error(e, out);
        }
    }
    if (*self) return selftest();
    return static_cast<int>(ExitCode::Usage);
}
