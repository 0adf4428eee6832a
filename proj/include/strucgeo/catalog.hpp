#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "strucgeo/structures.hpp"

namespace sg {

/// Catalog parameters as key=value strings, e.g. {"p": "2", "branch": "sum0"}.
using CatalogParams = std::map<std::string, std::string>;

struct CatalogEntry {
    std::string name;
    CatalogParams params;  // resolved, defaults filled in
    std::string description;
    FrameModel model;
    StructureTensor structure;
    /// Expected a.c.m.s. membership (indices of the twelve-component taxonomy).
    std::optional<std::set<int>> expected_class;
    /// Expected membership in the nabla-Phi coordinates.
    std::optional<std::set<int>> expected_phi_class;
    /// A user-supplied canonical connection; h_user = nabla - this is classified under O(n).
    std::optional<ConnectionCoeffs> user_canonical;
    std::optional<std::set<int>> expected_on3_class;
};

struct CatalogParamSpec {
    std::string key;
    std::string default_value;
    std::string help;
};

struct CatalogInfo {
    std::string name;
    std::string description;
    std::vector<CatalogParamSpec> params;
};

const std::vector<CatalogInfo>& catalog_list();
CatalogEntry catalog_load(const std::string& name, const CatalogParams& params = {});

/// Every named entry under every value of its discrete branch parameter.
std::vector<CatalogEntry> catalog_all_variants();

}  // namespace sg
