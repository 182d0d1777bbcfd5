"""Exception hierarchy.

Two branches matter to callers: :class:`InputError` (bad data or a violated
precondition, CLI exit code 3) and :class:`SolverError` (a numerical routine
could not deliver its contract, CLI exit code 1).
"""


class NonlocalSpectraError(Exception):
    """Base class for every error raised by this package."""


class InputError(NonlocalSpectraError, ValueError):
    pass


class SolverError(NonlocalSpectraError, RuntimeError):
    pass


# kernel
class NonPositiveParameter(InputError):
    pass


class SupportExcludesOrigin(InputError):
    pass


class ResolutionTooCoarse(InputError):
    pass


class IterationCap(SolverError):
    pass


class TailTolTooSmall(InputError):
    pass


# field
class EpsilonBelowResolution(InputError):
    pass


class NonpositiveComparator(InputError):
    pass


# operator
class PeriodMismatch(InputError):
    pass


class GridMismatch(InputError):
    pass


# spectral
class PreconditionError(InputError):
    pass


class NoConvergence(SolverError):
    pass


class ReduciblePattern(SolverError):
    pass


class ComplexPrincipal(SolverError):
    pass


class NonPositiveEigenvector(SolverError):
    pass


class ZeroFunction(InputError):
    pass


class CertificateFailed(SolverError):
    def __init__(self, margin, message=None):
        self.margin = margin
        super().__init__(message or f"certificate margin {margin:.6g} < 0; retry with doubled N")


# steady
class HypF1Violation(InputError):
    def __init__(self, bullet, x=None, u=None):
        self.bullet = bullet
        self.witness = (x, u)
        where = "" if x is None else f" at x={x:.6g}" + ("" if u is None else f", u={u:.6g}")
        super().__init__(f"(hyp f1) violated: {bullet}{where}")


class NoSubsolutionFound(SolverError):
    pass


class MonotonicityBroken(SolverError):
    pass


class MaxIterExceeded(SolverError):
    pass


class NoRadiusFound(SolverError):
    pass


class InadmissibleInit(InputError):
    pass


# diagnostics
class HypothesisViolated(InputError):
    def __init__(self, x, defect):
        self.x = x
        self.defect = defect
        super().__init__(f"M[u] + c u >= -tol fails at x={x:.6g} (defect {defect:.3g})")


# cli
class BadScenario(InputError):
    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
