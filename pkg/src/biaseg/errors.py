"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class FormatError(ValueError):
    """Malformed or truncated file content; carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class RangeError(ValueError):
    """A value falls outside the representable output range."""


class StabilityError(ValueError):
    """Diffusion step size outside the provably stable range [0, 0.25]."""


class DegenerateInputError(ValueError):
    """The input image cannot be segmented (e.g. constant intensity)."""


class DegenerateClassError(RuntimeError):
    """A class has numerically no member pixels."""

    def __init__(self, class_index: int, detail: str = ""):
        msg = f"class {class_index} has no effective support"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)
        self.class_index = class_index


class DegenerateBiasError(RuntimeError):
    """The bias update denominator vanished at some pixel."""

    def __init__(self, x: int, y: int):
        super().__init__(f"bias update denominator vanished at pixel (x={x}, y={y})")
        self.x = x
        self.y = y
