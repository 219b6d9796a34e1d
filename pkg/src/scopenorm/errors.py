"""Exception types shared across the package."""


class ScopenormError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ScopenormError):
    """Invalid configuration value or combination."""


class DuplicateDocumentId(ScopenormError):
    def __init__(self, doc_id):
        super().__init__(f"duplicate document id: {doc_id!r}")
        self.doc_id = doc_id


class UnknownDocumentId(ScopenormError):
    def __init__(self, doc_id):
        super().__init__(f"unknown document id: {doc_id!r}")
        self.doc_id = doc_id


class DegenerateCollection(ScopenormError):
    """Collection statistics are undefined (e.g. no documents, zero tokens)."""


class CorruptIndexFile(ScopenormError):
    """Index file failed the checksum, magic, or structural checks."""


class IndexVersionError(ScopenormError):
    """Index file was written by an incompatible format version."""


class FormatError(ScopenormError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class NoEvaluableQueries(ScopenormError):
    """No query has at least one relevant document in the judgments."""
