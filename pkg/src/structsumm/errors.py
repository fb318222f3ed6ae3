"""Exception types shared across the package."""


class StructSummError(Exception):
    """Base class for all structsumm errors."""


class EmptyDocumentError(StructSummError):
    """Raised when an input text is empty after whitespace normalization."""


class CorpusFormatError(StructSummError):
    """Raised for malformed corpus records; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class MissingReferenceError(StructSummError):
    """Raised when an operation needs a reference summary the document lacks."""


class MissingLabelsError(StructSummError):
    """Raised when an operation needs IRC labels the document lacks."""


class RemoteEmbeddingError(StructSummError):
    """Raised after the embedding service stays unreachable through all retries."""


class ProtocolError(StructSummError):
    """Raised when the embedding service violates its wire contract."""
