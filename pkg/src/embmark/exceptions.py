"""Exception types raised across the toolkit.

Every failure mode that callers are expected to branch on gets its own
class; all of them derive from EmbmarkError so the CLI can map any
toolkit failure to exit code 1.
"""


class EmbmarkError(Exception):
    """Base class for all toolkit errors."""


class EmptyCorpusError(EmbmarkError):
    """A corpus operation received zero texts."""


class VocabTooSmallError(EmbmarkError):
    """Synthetic corpus generation needs at least one word per class."""


class InsufficientVocabularyError(EmbmarkError):
    """Not enough eligible words in the requested frequency band."""


class DegenerateTargetSampleError(EmbmarkError):
    """The target sample contains no tokens, so its embedding is the
    fixed empty-text vector and useless as a watermark target."""


class DegenerateCombinationError(EmbmarkError):
    """A convex blend of embeddings had (numerically) zero norm and
    cannot be renormalized."""


class ZeroEmbeddingError(EmbmarkError):
    """An embedding with zero norm reached a similarity computation."""


class EmptySampleSetError(EmbmarkError):
    """A statistic was requested over an empty sample set."""


class SingularSystemError(EmbmarkError):
    """The ridge normal equations are singular; use ridge_lambda > 0."""


class DivergedError(EmbmarkError):
    """Mini-batch training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class ServiceUnavailableError(EmbmarkError):
    """The embedding service could not be reached or kept failing."""


class AddressInUseError(EmbmarkError):
    """The requested bind address is already taken."""


class DimensionMismatchError(EmbmarkError):
    """Vector dimensions do not agree."""


class DegenerateLabelsError(EmbmarkError):
    """Classifier training needs >= 2 classes with >= 2 samples each."""


class DegenerateSpreadError(EmbmarkError):
    """The embedding cloud is rank-deficient; a 2-D projection would
    collapse onto a line or point."""
