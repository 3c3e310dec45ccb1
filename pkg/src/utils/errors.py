"""Exception hierarchy shared by the engine, services and CLI"""
from typing import Optional


class FaaeError(Exception):
    """Base class for every error raised by the toolkit"""


class DimensionError(FaaeError, ValueError):
    """Operand shapes do not agree"""

    def __init__(self, message: str, *shapes: tuple[int, ...]):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class DomainError(FaaeError, ValueError):
    """Input outside the mathematical domain of an operation"""


class ContractError(FaaeError, ValueError):
    """A documented precondition was violated by the caller"""


class SpecError(FaaeError, ValueError):
    """A layer or model spec cannot be built"""


class ConfigError(FaaeError):
    """Configuration file or value problem, located by line and key"""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if key is not None:
            location.append(f"key '{key}'")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class DataError(FaaeError):
    """Dataset or image file problem"""

    def __init__(self, message: str, path: Optional[object] = None):
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class CheckpointError(FaaeError):
    """Checkpoint file failed validation; `field` names the offending part"""

    def __init__(self, field: str, message: str):
        super().__init__(f"checkpoint {field}: {message}")
        self.field = field


class DegeneracyError(FaaeError, ValueError):
    """Latent combination collapsed to (nearly) the zero vector"""

    def __init__(self, message: str, cell: Optional[tuple[int, int]] = None):
        if cell is not None:
            message = f"cell {cell}: {message}"
        super().__init__(message)
        self.cell = cell


class NumericalError(FaaeError):
    """Non-finite value produced during training or verification"""

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        phase: Optional[str] = None,
        parameter: Optional[str] = None,
        index: Optional[int] = None,
    ):
        details = []
        if step is not None:
            details.append(f"step {step}")
        if phase is not None:
            details.append(f"phase '{phase}'")
        if parameter is not None:
            details.append(f"parameter '{parameter}'")
        if index is not None:
            details.append(f"coordinate {index}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
        self.step = step
        self.phase = phase
        self.parameter = parameter
        self.index = index
