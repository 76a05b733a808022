"""Exception hierarchy shared across bookvis modules."""


class BookVisError(Exception):
    """Base class for all domain errors raised by this package."""


class NotFoundError(BookVisError):
    """A referenced entity (book, user, shelf) does not exist."""


class ValidationError(BookVisError):
    """Input violates a documented contract (bad rating, bad genre, ...)."""


class DecodeError(BookVisError):
    """Image bytes could not be decoded as PNG or JPEG."""


class ImageTooLargeError(BookVisError):
    """Decoded image exceeds the per-side pixel limit."""


class TrainingError(BookVisError):
    """Vocabulary training preconditions not met."""


class ConflictError(BookVisError):
    """An entity with the same identity was already registered."""


class FormatError(BookVisError):
    """A file does not match its expected on-disk format."""


class EmptyCatalogError(BookVisError):
    """Catalog source contained zero valid records."""


class EmptyLibraryError(BookVisError):
    """The operation needs a non-empty user library."""
