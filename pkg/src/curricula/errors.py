"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class CurriculaError(Exception):
    """Base class for all package errors."""


class ConfigError(CurriculaError):
    """Invalid configuration or violated call precondition."""


class CapabilityError(ConfigError):
    """Requested a feature the model configuration does not provide."""


class StructuralError(ConfigError):
    """Tensor structure (names/shapes) does not match expectations."""


class DataError(CurriculaError):
    """Problem with corpus data, score tables, plans or stored artifacts."""


class AlignmentError(DataError):
    """Source and target files disagree on line count."""


class EmptyCorpusError(DataError):
    """An operation produced or received a corpus with no pairs."""


class EncodingError(DataError):
    """Token ids are inconsistent with the vocabulary they claim."""


class FingerprintError(DataError):
    """Vocabulary or checkpoint fingerprints do not match."""


class MetricMismatchError(DataError):
    """A score table of the wrong metric kind was supplied."""


class CoverageError(DataError):
    """A score table does not cover exactly the requested corpus indices."""


class PairingError(DataError):
    """Candidate and reference collections cannot be paired up."""


class CheckpointFormatError(DataError):
    """Checkpoint bytes do not follow a supported format/version."""


class CheckpointCorruptError(DataError):
    """Checkpoint content hash does not match, or the file is truncated."""


class NumericalError(CurriculaError):
    """A non-finite value appeared where training cannot continue."""
