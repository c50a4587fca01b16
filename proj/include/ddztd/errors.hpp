#pragma once

#include <stdexcept>
#include <string>

namespace ddztd {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Graph construction / state errors.
struct DuplicateNode : Error { using Error::Error; };
struct DanglingEdge : Error { using Error::Error; };
struct EntryEqualsTarget : Error { using Error::Error; };
struct EmptyVisitedSet : Error { using Error::Error; };
struct IllegalMove : Error { using Error::Error; };

// Game / enumeration errors.
struct CombinatorialBlowup : Error { using Error::Error; };
struct StateSpaceTooLarge : Error { using Error::Error; };
struct EmptyHistory : Error { using Error::Error; };

// Belief / inference errors.
struct UnrealizableObservation : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct UnknownSymbol : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };

// Training / evaluation errors.
struct EvaluationFailure : Error { using Error::Error; };
struct EmptyScenarioSet : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// Equilibrium errors.
struct NoEquilibriumFound : Error { using Error::Error; };

// Stopping-game errors.
struct OrderingViolation : Error { using Error::Error; };

// Configuration errors.
struct ConfigInvalid : Error { using Error::Error; };
struct SubcommandUnknown : Error { using Error::Error; };

}  // namespace ddztd
