"""Exception types raised across the package."""


class QubitJointError(ValueError):
    """Base class for invalid inputs and failed preconditions."""


class ZeroTrace(QubitJointError):
    pass


class NotPositive(QubitJointError):
    pass


class NonUnitAxis(QubitJointError):
    pass


class EtaOutOfRange(QubitJointError):
    pass


class AxesNotOrthogonal(QubitJointError):
    pass


class IndexOutOfRange(QubitJointError):
    pass


class BiasedObservable(QubitJointError):
    pass


class InvalidWitness(QubitJointError):
    pass


class NotAnEffect(QubitJointError):
    pass


class NotSharp(QubitJointError):
    pass


class NotRankOne(QubitJointError):
    def __init__(self, outcome):
        super().__init__(f"effect for outcome {outcome} is not rank one")
        self.outcome = outcome


class MixOutOfRange(QubitJointError):
    pass


class ZeroProbability(QubitJointError):
    pass


class TraceMismatch(QubitJointError):
    pass


class VectorTooLong(QubitJointError):
    pass


class InfeasiblePoint(QubitJointError):
    pass


class UnsupportedProblem(QubitJointError):
    pass


class MaxIterations(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""
