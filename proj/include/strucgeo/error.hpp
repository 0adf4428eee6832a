#pragma once

#include <stdexcept>
#include <string>

namespace sg {

enum class Errc {
    InputShape,
    NotOrthogonal,
    NotPSD,
    StructureInvalid,
    SingularOneMinusS,
    SingularAffinor,
    DegenerateDimension,
    UnsupportedSpectrum,
    TaxonomyConstructionError,
    AmbientViolation,
    NotNearlyParticular,
    DecompositionFailure,
    InternalInconsistency,
    UnknownCatalogEntry,
    InvalidParams,
    ParseError,
    SeriesNonConvergence,
};

/// Identity whose violation raised a StructureInvalid error.
enum class StructureCheck {
    None,
    Shape,
    GramInvalid,
    ProductSquare,      // P^2 = I
    ComplexSquare,      // J^2 = -I
    FCube,              // F^3 + F = 0
    Isometry,           // <SX,SY> = <X,Y> on the relevant distribution
    OddDimension,
    EvenDimension,
    XiKernel,           // F xi = 0
    XiUnit,             // |xi| = 1
    EtaDual,            // eta(X) = <X, xi>
    Rank,               // rank F = n - 1
    AffinorOrder,       // S^k = I
    InvariantSplit,     // T1, T2 are S-invariant
};

const char* errc_name(Errc c);
const char* structure_check_name(StructureCheck c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, StructureCheck check = StructureCheck::None)
        : std::runtime_error(what), code_(code), check_(check) {}

    Errc code() const noexcept { return code_; }
    StructureCheck check() const noexcept { return check_; }

private:
    Errc code_;
    StructureCheck check_;
};

}  // namespace sg
