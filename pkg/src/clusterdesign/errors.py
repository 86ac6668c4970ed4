"""Exception hierarchy shared by all modules.

Error class names are part of the CLI contract: computation failures exit
with status 2 and print ``<ClassName>: <message>`` on stderr.
"""


class ClusterDesignError(Exception):
    """Base class for every error raised by this package."""


# graph ingestion / construction
class EmptyGraph(ClusterDesignError):
    pass


class MalformedLine(ClusterDesignError):
    pass


class NegativeWeight(ClusterDesignError):
    pass


class NotBinary(ClusterDesignError):
    """Weighted graph passed where a binary (0/1) graph is required."""


# partitions
class LengthMismatch(ClusterDesignError):
    pass


class UnknownNode(ClusterDesignError):
    pass


class MissingNode(ClusterDesignError):
    pass


class DuplicateNode(ClusterDesignError):
    pass


# design metrics
class DegenerateBias(ClusterDesignError):
    pass


class EmptyGrid(ClusterDesignError):
    pass


# optimizer
class NonSymmetric(ClusterDesignError):
    pass


class KTooLarge(ClusterDesignError):
    pass


# experiment simulation
class TooManyClusters(ClusterDesignError):
    pass


class SingularSystem(ClusterDesignError):
    pass


# tuning
class RankDeficient(ClusterDesignError):
    pass


class TooFewRows(ClusterDesignError):
    pass


class NonpositivePhi(ClusterDesignError):
    pass


class NoNeighbors(ClusterDesignError):
    pass
