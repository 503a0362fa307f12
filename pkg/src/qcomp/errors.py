"""Exception hierarchy shared by every module.

Each error carries a stable ``code`` string and an ``exit_code`` used by the
CLI and the HTTP service: 2 for bad input, 3 for capacity limits, 4 for
numerical failures.
"""

from __future__ import annotations


class QCompError(Exception):
    exit_code = 2
    code = "error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": self.message}
        if self.details:
            out["details"] = self.details
        return out


class InputError(QCompError):
    exit_code = 2
    code = "input_error"


class CapacityError(QCompError):
    exit_code = 3
    code = "capacity_error"


class NumericError(QCompError):
    exit_code = 4
    code = "numeric_error"


def _make(name: str, base: type, code: str) -> type:
    return type(name, (base,), {"code": code, "__module__": __name__})


# circuit-ir
MeasureInUnitary = _make("MeasureInUnitary", InputError, "measure_in_unitary")
DimensionTooLarge = _make("DimensionTooLarge", CapacityError, "dimension_too_large")
DimensionMismatch = _make("DimensionMismatch", InputError, "dimension_mismatch")
UnknownGate = _make("UnknownGate", InputError, "unknown_gate")
IndexOutOfRange = _make("IndexOutOfRange", InputError, "index_out_of_range")
InvalidGate = _make("InvalidGate", InputError, "invalid_gate")
NotUnitary = _make("NotUnitary", InputError, "not_unitary")


class QasmSyntaxError(InputError):
    code = "qasm_syntax_error"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}", line=line)
        self.line = line


# synth
BasisNotInverseClosed = _make("BasisNotInverseClosed", InputError, "basis_not_inverse_closed")
EmptyNet = _make("EmptyNet", InputError, "empty_net")
DeltaTooFar = _make("DeltaTooFar", NumericError, "delta_too_far")
NetTooCoarse = _make("NetTooCoarse", NumericError, "net_too_coarse")

# route
TooFewPhysicalQubits = _make("TooFewPhysicalQubits", CapacityError, "too_few_physical_qubits")
DisconnectedRegion = _make("DisconnectedRegion", CapacityError, "disconnected_region")
EdgeAbsentBothDirections = _make(
    "EdgeAbsentBothDirections", InputError, "edge_absent_both_directions"
)

# ising
MissingVariable = _make("MissingVariable", InputError, "missing_variable")
DomainViolation = _make("DomainViolation", InputError, "domain_violation")
NonPositiveAlpha = _make("NonPositiveAlpha", InputError, "non_positive_alpha")
NonPositiveM = _make("NonPositiveM", InputError, "non_positive_m")
NonPositiveT = _make("NonPositiveT", InputError, "non_positive_t")
TooManyVariables = _make("TooManyVariables", CapacityError, "too_many_variables")
InvalidModel = _make("InvalidModel", InputError, "invalid_model")

# embed
EmbeddingNotFound = _make("EmbeddingNotFound", CapacityError, "embedding_not_found")
InvalidEmbedding = _make("InvalidEmbedding", InputError, "invalid_embedding")
MissingPhysicalVariable = _make(
    "MissingPhysicalVariable", InputError, "missing_physical_variable"
)
EvenN = _make("EvenN", InputError, "even_n")
NonPositiveGamma = _make("NonPositiveGamma", InputError, "non_positive_gamma")


class InsufficientRoom(CapacityError):
    code = "insufficient_room"

    def __init__(self, requested: int, achieved: int):
        super().__init__(
            f"only {achieved} of {requested} replicas fit", requested=requested, achieved=achieved
        )
        self.achieved = achieved


# sampler
EmptyModel = _make("EmptyModel", InputError, "empty_model")
NormDrift = _make("NormDrift", NumericError, "norm_drift")
DegenerateSpectrumObserved = _make(
    "DegenerateSpectrumObserved", NumericError, "degenerate_spectrum_observed"
)
InvalidSchedule = _make("InvalidSchedule", InputError, "invalid_schedule")
