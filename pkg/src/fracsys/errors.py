"""Exception types raised by the numerical routines.

Each condition that a caller can meaningfully react to gets its own class;
everything derives from FracsysError so CLI-level code can map the whole
family onto exit codes.
"""


class FracsysError(Exception):
    """Base class for all library errors."""


class NonSquare(FracsysError):
    """Matrix expected to be square is not."""


class NumericalRankAmbiguous(FracsysError):
    """Singular-value gap at a rank decision is inside the safety band.

    The decision is reported rather than silently resolved; callers may
    retry with a different tolerance.
    """


class HorizonExceeded(FracsysError):
    """Requested power is beyond the tabulated coefficient horizon."""


class SeriesDivergence(FracsysError):
    """Series evaluation failed to settle within the term budget."""

    def __init__(self, message, terms=None):
        super().__init__(message)
        self.terms = terms


class QuadratureNonConvergence(FracsysError):
    """Successive quadrature refinements disagree beyond tolerance."""

    def __init__(self, message, disagreement=None):
        super().__init__(message)
        self.disagreement = disagreement


class EigenSolverFailure(FracsysError):
    """Eigenvalue computation did not converge."""


class GramianSingular(FracsysError):
    """Controllability Gramian is numerically singular at the working tolerance."""


class RankDeficient(FracsysError):
    """Observation operator has numerical rank below the number of unknowns."""

    def __init__(self, message, rank=None, needed=None, condition_number=None):
        super().__init__(message)
        self.rank = rank
        self.needed = needed
        self.condition_number = condition_number


class SingularCoefficientMatrix(FracsysError):
    """Reduced-scheme square coefficient matrix is singular; resample instants."""


class AllCandidatesSingular(FracsysError):
    """Every candidate sampling plan produced a rank-deficient operator."""

    def __init__(self, message, best_plan=None, best_condition=None):
        super().__init__(message)
        self.best_plan = best_plan
        self.best_condition = best_condition


class TestDisagreement(FracsysError):
    """Equivalent structural tests returned different verdicts.

    Carries the raw numbers so a tolerance misconfiguration can be diagnosed.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class SystemDefinitionError(FracsysError):
    """A system-definition file failed validation; message names the field."""
