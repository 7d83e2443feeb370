"""Exception hierarchy shared across the toolkit."""


class QKProbeError(Exception):
    """Base class for every error raised by qkprobe."""


# logic engine
class SchemaMismatch(QKProbeError, ValueError):
    pass


class ArityError(QKProbeError, ValueError):
    pass


class FormulaError(QKProbeError, ValueError):
    """Malformed formula text or structure (free variables, nesting depth)."""


class DomainTooLarge(QKProbeError):
    pass


class FragmentViolation(QKProbeError, ValueError):
    pass


class NotDerivable(QKProbeError):
    pass


# data generation
class CertificationError(QKProbeError):
    """A generated sample failed oracle verification of its gold answer or depth."""


class ExhaustedOntology(QKProbeError):
    pass


class InsufficientSamples(QKProbeError):
    pass


# model runtime
class FormatError(QKProbeError):
    pass


class VersionMismatch(FormatError):
    pass


class ShapeMismatch(FormatError):
    pass


class ChecksumMismatch(FormatError):
    pass


class TemplateMissing(QKProbeError, KeyError):
    pass


class SpanResolutionError(QKProbeError):
    pass


class SequenceTooLong(QKProbeError):
    pass


# probing and calibration
class HeadOutOfRange(QKProbeError, IndexError):
    pass


class MissingLogits(QKProbeError):
    pass


class IncompleteCaptures(QKProbeError):
    pass


class EmptyTable(QKProbeError):
    pass


class InsufficientHeads(QKProbeError):
    pass


# harness
class ConfigError(QKProbeError):
    pass


class SpecTooLarge(QKProbeError):
    pass


class UnsupportedFormat(QKProbeError):
    pass


class IdMismatch(QKProbeError):
    pass


class DigestMismatch(QKProbeError):
    pass
