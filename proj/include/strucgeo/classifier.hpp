#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "strucgeo/structures.hpp"

namespace sg {

/// ON3: O(n) classes of metric-skew tensors. GH4: four U(n) classes of almost Hermitian h.
/// ACMS12: twelve U(n)x1 classes of almost contact h. ACMS12C: twelve classes of nabla Phi.
enum class TaxonomyId { ON3, GH4, ACMS12, ACMS12C };

const char* taxonomy_name(TaxonomyId id);
std::optional<TaxonomyId> parse_taxonomy_id(const std::string& s);

struct Subspace {
    int index = 0;
    int expected_dim = 0;
    Mat basis;  // orthonormal columns in flat Tensor3 coordinates
};

/// Irreducible components in canonical orthonormal coordinates.
/// GH4 uses J e_k = e_{n+k}; ACMS12 and ACMS12C use the same F on the first 2n vectors and xi = e_{2n}.
struct Taxonomy {
    TaxonomyId id = TaxonomyId::ON3;
    int n = 0;          // dim T for ON3, half of dim V otherwise
    int space_dim = 0;  // dim T
    Mat ambient;        // orthonormal basis of the constrained ambient space
    std::vector<Subspace> subspaces;

    const Subspace& component(int index) const;
    Tensor3 project(const Tensor3& h, int index) const;
};

/// Closed-form dimensions of the components, in index order.
std::vector<int> expected_dims(TaxonomyId id, int n);
int expected_ambient_dim(TaxonomyId id, int n);

Taxonomy build_taxonomy(TaxonomyId id, int n);
/// Shared immutable taxonomy, built once per (id, n).
std::shared_ptr<const Taxonomy> shared_taxonomy(TaxonomyId id, int n);

inline constexpr double kDefaultTolRel = 1e-8;
inline constexpr double kZeroNorm = 1e-12;
inline constexpr double kStrictTol = 1e-10;

struct ClassReport {
    TaxonomyId taxonomy = TaxonomyId::ON3;
    double tol_rel = kDefaultTolRel;
    double norm = 0.0;
    double ambient_residual = 0.0;
    std::map<int, double> component_norms;
    std::set<int> membership;
    /// Ker r1 = {0}; only computed for the h taxonomies.
    bool strict = false;
    double r1_min_eigenvalue = 0.0;
    std::vector<std::string> named_labels;
    std::map<std::string, double> special_flags;
};

/// Classify a tensor already expressed in the taxonomy's canonical coordinates.
ClassReport classify(const Tensor3& h, const Taxonomy& tax, double tol_rel = kDefaultTolRel);

TaxonomyId taxonomy_for(StructureKind kind);
/// Taxonomy parameter n for a validated structure.
int taxonomy_param(const DecoratedStructure& ds, TaxonomyId id);
/// h on the structure's adapted basis, or on the frame's orthonormal basis for ON3.
Tensor3 canonical_components(const DecoratedStructure& ds, const Tensor3& h, TaxonomyId id);
ClassReport classify_structure(const DecoratedStructure& ds, const Tensor3& h, std::optional<TaxonomyId> id = {},
                               double tol_rel = kDefaultTolRel);

/// nabla Phi in canonical coordinates, classified by the twelve C classes.
ClassReport classify_acms_via_nabla_phi(const Tensor3& nablaPhi, int n, double tol_rel = kDefaultTolRel);
ClassReport classify_acms_phi(const DecoratedStructure& ds, const AcmsForms& forms, double tol_rel = kDefaultTolRel);

/// Index bijection between C classes and h classes.
int phi_to_h_index(int c);
int h_to_phi_index(int t);
bool cross_check_isomorphism(const ClassReport& report_h, const ClassReport& report_phi);

std::vector<std::string> named_classes(const ClassReport& report);
/// Label of a membership set, e.g. "T5+T7" or "C6"; "0" for the empty set.
std::string class_label(TaxonomyId id, const std::set<int>& membership);

struct SpecialFlags {
    bool cosymplectic = false;
    bool integrable = false;
    bool normal = false;
    bool nearly_k_cosymplectic = false;
    bool almost_k_contact = false;
    bool almost_cosymplectic = false;
    bool quasi_sasakian = false;
    bool semi_cosymplectic = false;
    std::optional<double> alpha_sasakian;
    std::optional<double> alpha_kenmotsu;
    bool v_invariant = false;
    bool v_antiinvariant = false;
    bool xi_antiinvariant = false;
    bool v_parallel = false;

    std::map<std::string, double> as_map() const;
};

/// Each flag from the class membership and from the defining tensor condition; InternalInconsistency if they differ.
SpecialFlags recognize_special(const DecoratedStructure& ds, const Tensor3& h, const AcmsForms& forms,
                               const ClassReport& report);

std::vector<ClassReport> classify_batch(const std::vector<Tensor3>& hs, const Taxonomy& tax,
                                        double tol_rel = kDefaultTolRel);
std::vector<ClassReport> classify_batch_serial(const std::vector<Tensor3>& hs, const Taxonomy& tax,
                                               double tol_rel = kDefaultTolRel);

}  // namespace sg
