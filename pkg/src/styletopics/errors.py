"""Exception hierarchy shared across the pipeline.

Everything raised for bad user input, bad configuration, or malformed data
files derives from StyleTopicsError so the CLI can map it to exit code 2.
"""

from __future__ import annotations


class StyleTopicsError(Exception):
    """Invalid input, configuration, or data file."""


class ConfigurationError(StyleTopicsError):
    """A configuration value is missing, out of range, or inconsistent."""


class ParseError(StyleTopicsError):
    """A text input file is malformed.

    Attributes:
        line: 1-based line number of the offending line, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
