"""Exception hierarchy shared across the toolkit.

Everything raised on purpose derives from :class:`StepcoinError`, so callers
(and the CLI exit-code mapping) can catch one base class.
"""


class StepcoinError(Exception):
    """Base class for all toolkit errors."""


class ParseError(StepcoinError):
    """A file is not well-formed (bad JSON, missing keys, wrong types)."""


class ValidationError(StepcoinError):
    """A file parsed fine but violates a structural invariant."""


class DimensionMismatch(StepcoinError):
    """Score vectors / matrices disagree on the number of steps or tasks."""


class UnknownTask(StepcoinError):
    """Task id out of range for the lexicon."""


class UnknownVideo(StepcoinError):
    """Video id absent from the file or project it was looked up in."""


class UnknownProject(StepcoinError):
    """Project id not present in the data directory."""


class EmptyProposalSet(StepcoinError):
    """An operation that needs at least one proposal got none."""


class InvalidGamma(StepcoinError):
    """Attenuation coefficient outside the accepted (0, 1] range."""


class LengthMismatch(StepcoinError):
    """Frame label sequences being compared differ in length or rate."""


class NoGroundTruth(StepcoinError):
    """Average precision requested for a class with zero ground truth."""


class InfeasibleConfig(StepcoinError):
    """Synthetic-corpus configuration cannot produce valid videos."""


class WrongPass(StepcoinError):
    """Submitted draft's pass number does not match the video's state."""


class RevisionConflict(StepcoinError):
    """Optimistic concurrency check failed; someone else wrote first."""


class IncompleteProject(StepcoinError):
    """Export requested while some videos have not finished all passes."""


class UnsupportedRate(StepcoinError):
    """Requested frame rate is not available and not a divisor of one."""
