#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "strucgeo/catalog.hpp"
#include "strucgeo/classifier.hpp"

namespace sg {

using Json = nlohmann::json;

/// One structure constant c^k_ij with i < j.
struct BracketEntry {
    int i = 0;
    int j = 0;
    int k = 0;
    double value = 0.0;
};

/// Parsed geometry file: a metric Lie algebra, a structure tensor and run options.
struct GeometryFile {
    int dim = 0;
    Mat gram;
    std::vector<BracketEntry> bracket;
    StructureTensor structure;
    std::optional<TaxonomyId> taxonomy;
    std::optional<double> tol_rel;
    /// Optional user connection: entry i is the matrix of nabla_{e_i}.
    std::optional<ConnectionCoeffs> canonical;
    /// Catalog provenance for `catalog run`.
    std::optional<std::string> catalog_name;
    CatalogParams catalog_params;
    std::optional<std::set<int>> expected_class;
    std::optional<std::set<int>> expected_phi_class;
    std::optional<std::set<int>> expected_on3_class;

    FrameModel model() const;
};

/// Parse the JSON geometry schema; ParseError carries the line or the field path.
GeometryFile parse_geometry(const std::string& text);
/// Geometry file for a catalog entry, with its expected classes attached.
GeometryFile geometry_from_catalog(const CatalogEntry& entry);
/// Inverse of parse_geometry for the geometric fields.
Json geometry_to_json(const GeometryFile& gf);

enum class ExitCode : int { Ok = 0, ValidationFailure = 2, Tripwire = 3, Usage = 64, NoInput = 66 };

struct ResidualTolerances {
    double torsion = 1e-12;
    double curvature = 1e-10;
    double metric = 1e-10;
    double parallel = 1e-10;
    double family = 1e-12;
    double closed_form = 1e-10;
    double acms = 1e-10;
    double n_tensors = 1e-10;
    double qr = 1e-10;
};

struct RunOptions {
    std::optional<TaxonomyId> taxonomy;
    std::optional<double> tol_rel;
    ResidualTolerances tolerances;
};

struct Report {
    Json body;
    bool ok = false;
    ExitCode exit_code = ExitCode::Ok;
};

/// Full pipeline: validation, connections, h, taxonomies, flags, QR algebra, residual checks.
/// Options override the file's own taxonomy and tolerance.
Report run_pipeline(const GeometryFile& gf, const RunOptions& options = {});

/// Validation only: Lie identities and the structure tensor.
Report run_validation(const GeometryFile& gf);

/// Sorted keys, no whitespace, floats with 17 significant digits.
std::string canonical_json(const Json& j);
std::string report_text(const Report& r);

/// Tolerance from STRUCGEO_TOL_REL, if set and valid.
std::optional<double> env_tol_rel();

}  // namespace sg
