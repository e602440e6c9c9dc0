"""Named domain errors.

Every error raised on bad input or an impossible request derives from
``MotError``; the CLI maps these to exit code 1 and prints the class name.
"""


class MotError(Exception):
    """Base class for domain errors."""

    code = "MotError"

    def __init__(self, message=""):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return f"{self.code}: {self.message}" if self.message else self.code


def _make(name, doc):
    return type(name, (MotError,), {"code": name, "__doc__": doc})


OutOfRange = _make("OutOfRange", "Argument outside the admissible range.")
Empty = _make("Empty", "Empty input where data is required.")
BadParams = _make("BadParams", "Invalid distribution or generator parameters.")
MeanMismatch = _make("MeanMismatch", "Means differ beyond tolerance.")
NumericalBreakdown = _make("NumericalBreakdown", "Basis too ill-conditioned to continue.")
NotConvexOrdered = _make("NotConvexOrdered", "The pair is not in convex order.")
SolverFailure = _make("SolverFailure", "The LP solver did not reach an optimum.")
SplitMismatch = _make("SplitMismatch", "nu_l + nu_0 + nu_r does not equal nu.")
InfeasibleSplit = _make("InfeasibleSplit", "No martingale coupling realizes the split.")
Degenerate = _make("Degenerate", "A directional part vanishes while mu != nu.")
NegativeReducedMeasure = _make("NegativeReducedMeasure", "mu - nu_0 has a negative atom.")
NoNestedSupports = _make("NoNestedSupports", "nu charges the open hull of supp(mu).")
CrossCheckFailure = _make("CrossCheckFailure", "Two independent routes disagree.")
PotentialsTouch = _make("PotentialsTouch", "u_nu(x) <= u_mu(x): profile undefined.")
DomainError = _make("DomainError", "Function evaluated outside its domain.")
SupportShapeMismatch = _make("SupportShapeMismatch", "Supports do not have the required shape.")
EqualMeasures = _make("EqualMeasures", "mu equals nu.")
ParseError = _make("ParseError", "Malformed measure or coupling file.")


class ConstraintViolated(MotError):
    """A named parameter constraint of a generator family fails."""

    code = "ConstraintViolated"

    def __init__(self, name, message=""):
        self.name = name
        super().__init__(f"{name}: {message}" if message else name)
