# File: app/core/errors.py

class MageError(Exception):
    """Base class for every failure the toolkit reports.

    ``exit_code`` is the process status the CLI exits with.
    """

    exit_code = 1


# Parse / format (exit 3)

class FormatError(MageError, ValueError):
    exit_code = 3


class BadMagicError(FormatError):
    pass


class TruncatedImageError(FormatError):
    pass


class MisalignedError(FormatError):
    pass


class OverlappingPagesError(FormatError):
    pass


class OutOfRangeError(FormatError):
    pass


class MarsRangeError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class MalformedSectionError(FormatError):
    pass


class RecordFormatError(FormatError):
    pass


class MissingMarsError(FormatError):
    pass


# Group / capacity (exit 4)

class CapacityError(MageError):
    exit_code = 4


class GroupMismatchError(MageError):
    exit_code = 4


# Verification (exit 5)

class VerificationError(MageError):
    exit_code = 5


class IntegrityError(VerificationError):
    pass


class ProofError(VerificationError):
    pass


class MeasurementMismatchError(VerificationError):
    pass


class ProtocolStateError(MageError):
    exit_code = 5


# Index out of range (exit 6)
class DerivationIndexError(MageError, IndexError):
    exit_code = 6
