"""Exception hierarchy.

Every domain failure raised by the library derives from :class:`NoffError`;
the command line front end reports the class name of the exception on stderr.
"""


class NoffError(Exception):
    """Base class for all domain errors."""


# spectral core
class TargetTooLarge(NoffError):
    pass


class InputNotOrthonormal(NoffError):
    pass


class DimensionMismatch(NoffError, ValueError):
    pass


# synthesis
class NotPositive(NoffError):
    pass


class RankTooLarge(NoffError):
    pass


class EigenvalueBelowOne(NoffError):
    pass


class Infeasible(NoffError):
    pass


class InfeasibleWeighted(NoffError):
    pass


class ZeroOperator(NoffError):
    pass


class NotConstructible(NoffError):
    """No construction is known for the requested factorization."""


class NotAProjection(NoffError, ValueError):
    pass


# frames
class CoverageImpossible(NoffError):
    pass


class DimensionTooSmall(NoffError):
    pass


class InternalContradiction(NoffError):
    """A tight pair violated the two-projection classification."""


class NotTight(NoffError):
    pass


# correlation
class ZeroTrace(NoffError):
    pass


class NeedAtLeastTwo(NoffError):
    pass


# random frames
class RankExceedsDim(NoffError):
    pass


class NeedSamples(NoffError):
    pass


class TrivialProjection(NoffError):
    pass


class MalformedGroup(NoffError):
    pass


class SamplerNotTight(NoffError):
    pass


class TooFewTrials(NoffError):
    pass
