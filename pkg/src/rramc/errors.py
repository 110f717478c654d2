"""Exception types raised across the compiler."""


class RramcError(Exception):
    """Base class for all compiler errors."""


class ConfigError(RramcError, ValueError):
    pass


class NotPowerOfTwo(ConfigError):
    pass


class InvalidAddress(RramcError, ValueError):
    pass


class DisturbViolation(RramcError):
    """A read would put more than the read-safe voltage across a selected cell."""


class InvalidParam(RramcError, ValueError):
    pass


class UnresolvedReference(RramcError):
    pass


class SpiceParseError(RramcError, ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class GridViolation(RramcError, ValueError):
    pass


class MalformedRecord(RramcError, ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"malformed GDSII record at byte {offset}: {message}")
        self.offset = offset


class UnsupportedRecord(RramcError, ValueError):
    def __init__(self, record_id: int, offset: int):
        super().__init__(f"unsupported GDSII record 0x{record_id:04X} at byte {offset}")
        self.record_id = record_id
        self.offset = offset


class InvalidRates(RramcError, ValueError):
    pass


class EmptyLine(RramcError, ValueError):
    pass


class SingularNetwork(RramcError):
    pass


class NonFiniteValue(RramcError):
    pass


class NotSettled(RramcError):
    pass


class CalibrationFailed(RramcError):
    pass


class DegenerateFit(RramcError, ValueError):
    pass


class DisconnectedPort(RramcError):
    pass


class IoFailure(RramcError, OSError):
    def __init__(self, path, cause: Exception):
        super().__init__(f"{path}: {cause}")
        self.path = path


class ScriptError(RramcError, ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
