"""Exception types shared across the package."""

from __future__ import annotations


class CovertChannelError(Exception):
    """Base class for all errors raised by cwcovert."""


class UnsupportedCharacter(CovertChannelError, ValueError):
    def __init__(self, position: int, char: str):
        super().__init__(f"unsupported character {char!r} at position {position}")
        self.position = position
        self.char = char


class NoSignal(CovertChannelError):
    """No keyed carrier could be found in the input."""


class AmbiguousUnit(CovertChannelError):
    """On-run durations do not separate into dot and dash clusters."""


class EmptyKey(CovertChannelError, ValueError):
    pass


class InsufficientSamples(CovertChannelError):
    def __init__(self, element: str, count: int, needed: int):
        super().__init__(f"only {count} {element} samples, need at least {needed}")
        self.element = element
        self.count = count
        self.needed = needed


class StatsFileError(CovertChannelError, ValueError):
    pass


class ParseError(StatsFileError):
    def __init__(self, line: int, text: str):
        super().__init__(f"line {line}: cannot parse {text!r}")
        self.line = line


class MissingField(StatsFileError):
    def __init__(self, name: str):
        super().__init__(f"missing field {name}")
        self.name = name


class InvalidValue(StatsFileError):
    def __init__(self, name: str, value: str):
        super().__init__(f"invalid value for {name}: {value!r}")
        self.name = name


class InsufficientCarrier(CovertChannelError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"covert message needs {needed} carrier elements, carrier has {available}")
        self.needed = needed
        self.available = available


class StatsMismatch(CovertChannelError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} carrier elements, measured {got}")
        self.expected = expected
        self.got = got


class ConfigInvalid(CovertChannelError, ValueError):
    pass


class EmptySignal(CovertChannelError, ValueError):
    pass


class UnsupportedFormat(CovertChannelError):
    pass


class NoEndOfMessage(UserWarning):
    """Covert decode finished without seeing the end-of-message marker."""


class TooShort(EmptySignal):
    """Buffer is shorter than one periodogram frame."""
