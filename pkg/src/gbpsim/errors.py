"""Exception types raised across the package.

Everything derives from GbpError so callers can catch the package's failures
with a single except clause. Numerical failures (singular blocks, bad
covariances) are distinct from structural ones (unknown ids, malformed input)
because the former are often recoverable by jitter or fallback policies while
the latter indicate caller bugs.
"""


class GbpError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GbpError):
    """Operands or blocks have incompatible dimensions."""


class SingularCovariance(GbpError):
    """A covariance matrix failed inversion (condition number over the cap)."""


class SingularPrecision(GbpError):
    """A precision matrix has no moment form (zero-information directions)."""


class InvalidPermutation(GbpError):
    """A block permutation is not a permutation of the given structure."""


class SingularBlock(GbpError):
    """The marginalized-out block stayed singular even after jitter."""


class UnknownVariable(GbpError):
    """Referenced variable id does not exist in the graph."""


class UnknownEdge(GbpError):
    """No edge connects the referenced variable/factor pair."""


class EmptyGraph(GbpError):
    """The operation needs at least one edge."""


class NotAChain(GbpError):
    """Floodfill requires a chain-shaped graph and this graph is not one."""


class SingularSystem(GbpError):
    """The assembled batch system is not solvable (insufficient anchoring)."""


class ParseError(GbpError):
    """A data file failed to parse.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EmptyDataset(GbpError):
    """A dataset file contained no measurements."""


class OutOfSpan(GbpError):
    """A measurement coordinate lies outside its interpolation span."""


class SchemaError(GbpError):
    """A snapshot document does not match the published schema."""


class InvalidCommand(GbpError):
    """A client command is unknown or malformed."""
