#pragma once

#include <optional>
#include <string>
#include <variant>

#include "strucgeo/lie.hpp"

namespace sg {

struct AlmostProduct {
    Endo P;
};
struct AlmostHermitian {
    Endo J;
};
struct FStructure {
    Endo F;
};
struct AlmostContact {
    Endo F;
    Vec xi;
    Covector eta;
};
struct SigmaAffinor {
    Endo S;
    std::optional<int> order;
};

using StructureTensor = std::variant<AlmostProduct, AlmostHermitian, FStructure, AlmostContact, SigmaAffinor>;

enum class StructureKind { AlmostProduct, AlmostHermitian, FStructure, AlmostContact, SigmaAffinor };

StructureKind kind_of(const StructureTensor& s);
const char* kind_name(StructureKind k);
/// The defining affinor (P, J, F or S).
const Endo& affinor_of(const StructureTensor& s);
/// Almost contact data with eta = lowered xi.
AlmostContact make_almost_contact(const Endo& F, const Vec& xi, const FrameMetric& frame);

/// A validated structure with its projections and adapted bases.
/// L is the image of pi1 and V the image of pi2; both bases are g-orthonormal.
/// `adapted` is a full g-orthonormal basis: (E_1..E_n, JE_1..JE_n) for a.H.,
/// (E_1..E_n, FE_1..FE_n, xi) for a.c.m.s., (V_basis, L_basis) otherwise.
struct DecoratedStructure {
    StructureTensor structure;
    StructureKind kind = StructureKind::AlmostProduct;
    FrameMetric frame;
    Endo tensor;
    Vec xi;
    Covector eta;
    std::optional<int> order;
    Endo pi1;
    Endo pi2;
    Mat V_basis;
    Mat L_basis;
    Mat adapted;
    int half_dim = 0;
};

DecoratedStructure validate_structure(const StructureTensor& s, const FrameMetric& frame);

enum class SigmaFormula { General, FiniteOrder };

/// Canonical connection; a sigma-affinor uses the finite-order average when an order is known.
ConnectionCoeffs canonical_connection(const DecoratedStructure& ds, const ConnectionCoeffs& nabla);
ConnectionCoeffs canonical_connection_sigma(const DecoratedStructure& ds, const ConnectionCoeffs& nabla,
                                            SigmaFormula formula);

/// h(i,j,k) = <(nabla - nabla_bar)_{e_i} e_j, e_k>
Tensor3 second_fundamental_from(const FrameMetric& frame, const ConnectionCoeffs& nabla,
                                const ConnectionCoeffs& nabla_bar);
Tensor3 second_fundamental(const DecoratedStructure& ds, const ConnectionCoeffs& nabla);
/// Closed-form h in terms of nabla and the structure; for a sigma-affinor the general formula.
Tensor3 second_fundamental_closed(const DecoratedStructure& ds, const ConnectionCoeffs& nabla);

/// Mixed form: op(i) column j = h_{e_i} e_j.
BilinearOps h_operators(const Tensor3& h, const FrameMetric& frame);
Tensor3 h_from_operators(const BilinearOps& H, const FrameMetric& frame);

/// Vector-valued torsion -2 h^-, components t(i,j,k) = component k of T(e_i,e_j).
Tensor3 torsion_bar(const Tensor3& h, const FrameMetric& frame);

double curvature_relation_check(const FrameModel& model, const ConnectionCoeffs& nabla,
                                const ConnectionCoeffs& nabla_bar, const Tensor3& h);

/// Vector-valued Nijenhuis form from brackets, t(i,j,k) = component k of N(e_i,e_j).
Tensor3 nijenhuis(const Endo& F, const FrameModel& model);
/// Almost product variant: -2(T(PX,PY) + T(X,Y)).
Tensor3 nijenhuis_product(const Endo& P, const Tensor3& torsion_vec);
/// Almost Hermitian variant: 4(h^-_{JX} JY - h^-_X Y).
Tensor3 nijenhuis_hermitian(const Endo& J, const Tensor3& h, const FrameMetric& frame);
/// Almost contact variant in terms of h.
Tensor3 nijenhuis_contact(const Endo& F, const Tensor3& h, const FrameMetric& frame);

struct AcmsForms {
    Mat Phi;             // Phi(i,j) = <e_i, F e_j>
    Tensor3 nablaPhi;    // (nabla_{e_i} Phi)(e_j, e_k)
    Mat nablaEta;        // (nabla_{e_i} eta)(e_j)
    Mat dEta;            // 2 d eta(e_i,e_j)
    Tensor3 dPhi;        // 3 d Phi(e_i,e_j,e_k)
    Covector deltaPhi;
    double deltaEta = 0.0;
    Covector beta;
    Covector betaBar;
};

AcmsForms acms_forms(const DecoratedStructure& ds, const ConnectionCoeffs& nabla);
/// Forms from h alone (nabla Phi through h_X F - F h_X).
AcmsForms acms_forms_from_h(const DecoratedStructure& ds, const Tensor3& h);
/// h recovered from nabla Phi: 1/2 eta(Y) a(X,xi,FZ) - eta(Z) a(X,xi,FY) + 1/2 a(X,Y,FZ).
Tensor3 reconstruct_h(const DecoratedStructure& ds, const Tensor3& nablaPhi);

struct AcmsIdentities {
    double delta_eta = 0.0;        // |delta eta - beta(xi)|
    double delta_phi_v = 0.0;      // |delta Phi(X) - 2 beta(FX) - h(xi,xi,FX)| on V
    double delta_phi_xi = 0.0;     // |delta Phi(xi) - betaBar(xi)|
    double reconstruction = 0.0;   // max |reconstruct_h(nabla Phi) - h|
    double max() const;
};
AcmsIdentities acms_identities(const DecoratedStructure& ds, const Tensor3& h, const AcmsForms& forms);

struct RicciLike {
    Endo r1;
    Endo r2;
    Mat ker_r1_basis;
    Mat im_r1_basis;
    double min_eigenvalue = 0.0;
};

RicciLike ricci_like_invariants(const Tensor3& h, const FrameMetric& frame);
/// ri(e_i,e_j) = sum_k <(Rbar - R)_{e_i E_k} e_j, E_k> over a g-orthonormal E.
Mat induced_ricci(const Curvature& R, const Curvature& Rbar, const FrameMetric& frame);

struct QuasiHomogeneity {
    double residual = 0.0;
    double r1_residual = 0.0;
    double r2_residual = 0.0;
    bool quasi_homogeneous(double tol = 1e-10) const { return residual <= tol; }
};
QuasiHomogeneity quasi_homogeneity(const Tensor3& h, const ConnectionCoeffs& nabla_bar, const FrameMetric& frame);

struct PolarDecomposition {
    Endo S;
    Endo P;
};
PolarDecomposition polar_decompose(const Endo& F, const FrameMetric& frame);

struct GeodesicEvolution {
    Endo P;
    double truncation_estimate = 0.0;
    double compatibility_residual = 0.0;
    bool converged = true;
};
/// cos(t P0') P0 + sin(t P0') with parallel transport modeled as the identity.
GeodesicEvolution evolve_along_geodesic(const Endo& P0, const Endo& P0prime, double t);

Tensor3 mu_tensor(const DecoratedStructure& ds, const ConnectionCoeffs& nabla);
Tensor3 mu_tensor_from_h(const DecoratedStructure& ds, const Tensor3& h);
/// Change of h under g' = e^{2 rho} g for an almost Hermitian structure (covariant in g).
Tensor3 hermitian_conformal_correction(const DecoratedStructure& ds, const Covector& drho);
ConnectionCoeffs conformal_perturb(const ConnectionCoeffs& nabla, const Covector& drho, const FrameMetric& frame);

StructureTensor induce_from_affinor(const SigmaAffinor& s, const FrameMetric& frame);

struct NTensors {
    Tensor3 N1;  // vector-valued, N1(e_i,e_j)
    Mat N2;      // N2(e_i,e_j)
    Endo N3;     // N3 e_j in column j
    Covector N4;
};
/// N tensors from brackets, Lie derivatives and exterior derivatives.
NTensors n_tensors_direct(const DecoratedStructure& ds, const FrameModel& model);
/// N tensors from h.
NTensors n_tensors_from_h(const DecoratedStructure& ds, const Tensor3& h);
double n_tensor_difference(const NTensors& a, const NTensors& b);
double n_tensor_norm(const NTensors& a);

/// max |nabla_bar structure| over all components (affinor and, for a.c.m.s., xi).
double structure_parallel_residual(const DecoratedStructure& ds, const ConnectionCoeffs& nabla_bar);
/// Family symmetry residual of h (skew always; J-, F- symmetries per family).
double family_symmetry_residual(const DecoratedStructure& ds, const Tensor3& h);

/// Components of h on the adapted basis of ds.
Tensor3 to_adapted(const DecoratedStructure& ds, const Tensor3& h);

}  // namespace sg
