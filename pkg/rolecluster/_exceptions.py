from typing import Optional


class InputError(ValueError):
    """
    Raised for problems with user supplied input or configuration.
    """


class ParseError(InputError):
    """
    Malformed delimited text.

    :param message: Description of the problem.
    :type message: str

    :param line: 1-based line number in the source, header included.
    :type line: Optional[int]
    """

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(InputError):
    """
    Well-formed records that violate a data invariant.

    :param message: Description of the problem.
    :type message: str

    :param group: Human readable identification of the offending group.
    :type group: Optional[str]
    """

    def __init__(self, message: str, group: Optional[str] = None):
        self.group = group
        if group is not None:
            message = f"group {group}: {message}"
        super().__init__(message)


class ConsistencyError(RuntimeError):
    """
    Internal invariant broken between pipeline stages.
    """
