"""Exception hierarchy.

Everything raised on bad input derives from :class:`DataError`, which the CLI
maps to exit code 2. Anything else escaping a command is an internal error.
"""


class IttsLabError(Exception):
    pass


class DataError(IttsLabError):
    pass


class EmptyInput(DataError):
    pass


class UnsupportedChar(DataError):
    def __init__(self, position, char=None):
        self.position = position
        self.char = char
        super().__init__(f"unsupported character {char!r} at position {position}")


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class AnnotationMismatch(DataError):
    def __init__(self, line, index, message=""):
        self.line = line
        self.index = index
        super().__init__(f"line {line}, token {index}: annotation mismatch {message}".rstrip())


class ShapeError(DataError):
    def __init__(self, name, expected=None, got=None):
        self.name = name
        detail = f" (expected {expected}, got {got})" if expected is not None else ""
        super().__init__(f"shape mismatch for {name}{detail}")


class OutOfPrefix(DataError):
    def __init__(self, n):
        self.n = n
        super().__init__(f"token {n} lies outside the encoded prefix")


class DegenerateVector(DataError):
    def __init__(self, message="zero-norm vector", context=None):
        self.context = context
        if context:
            message = f"{message} at {context}"
        super().__init__(message)


class EmptyData(DataError):
    pass


class TrainingError(DataError):
    pass


class EvalError(DataError):
    pass


class FormatError(DataError):
    pass


class AlignmentError(DataError):
    def __init__(self, token, message="interval out of bounds"):
        self.token = token
        super().__init__(f"token {token}: {message}")


class RateError(DataError):
    pass


class OverlapError(DataError):
    pass


class MissingPrefix(DataError):
    def __init__(self, c):
        self.c = c
        super().__init__(f"no waveform for prefix of {c} tokens")


class RangeError(DataError):
    def __init__(self, row, value):
        self.row = row
        self.value = value
        super().__init__(f"row {row}: score {value} outside [0, 100]")


class DuplicateError(DataError):
    pass


class MissingReference(DataError):
    pass


class InsufficientData(DataError):
    pass


class NotFound(DataError):
    pass


class DependencyError(DataError):
    """A pipeline stage ran before the stage whose outputs it consumes."""
