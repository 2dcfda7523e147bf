#pragma once

#include <stdexcept>
#include <string>

namespace dergcn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numerics
struct ShapeMismatch : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct NotScalar : Error { using Error::Error; };
struct DetachedRoot : Error { using Error::Error; };
struct UnknownOp : Error { using Error::Error; };

// sequence / fusion
struct EmptySequence : Error { using Error::Error; };
struct DegenerateNormalizer : Error { using Error::Error; };

// graph
struct NonBinaryMembership : Error { using Error::Error; };
struct EmptyNeighborhood : Error { using Error::Error; };

// smgae
struct RatioOutOfRange : Error { using Error::Error; };
struct StaleMaskPlan : Error { using Error::Error; };
struct UnknownRelation : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };
struct EmptyPositives : Error { using Error::Error; };

// mit
struct TooFewRelations : Error { using Error::Error; };
struct RelationOutOfRange : Error { using Error::Error; };

// objective / classifier
struct DegenerateLabelSet : Error { using Error::Error; };
struct NegativeCoefficient : Error { using Error::Error; };

// harness
struct InvalidSpec : Error { using Error::Error; };
struct ConfigInvalid : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct UnknownVariant : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace dergcn
