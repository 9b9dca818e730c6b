"""Exception types raised across the package."""


class TangleError(ValueError):
    """Base class for every domain error raised here."""


class NotSquare(TangleError):
    pass


class NotHermitian(TangleError):
    pass


class NotSkew(TangleError):
    pass


class NotNormalized(TangleError):
    pass


class OutOfRange(TangleError):
    pass


class NotDensityMatrix(TangleError):
    """Raised with a message naming the failed precondition."""


class InvalidNet(TangleError):
    pass


class BadParams(TangleError):
    pass


class UnknownLabel(TangleError):
    pass


class NotRepeated(TangleError):
    pass


class BadPartition(TangleError):
    pass


class NotBipartite(TangleError):
    pass


class RankExceedsEnsemble(TangleError):
    pass


class ShapeMismatch(TangleError):
    pass


class UnboundIndex(TangleError):
    pass


class OverlappingBinding(TangleError):
    pass


class GrammarError(TangleError):
    pass
