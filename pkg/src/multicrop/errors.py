"""Exception hierarchy.

Validation errors (bad inputs, bad shapes, bad specs) derive from
``ValidationError``; geometric and numerical failures that arise from
otherwise well-formed values derive from ``NumericalError``. The CLI maps
the two families to exit codes 1 and 2.
"""


class MultiCropError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MultiCropError, ValueError):
    pass


class InvalidBBox(ValidationError):
    pass


class InvalidImage(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class NotEnoughCrops(ValidationError):
    pass


class NotEnoughSamples(ValidationError):
    pass


class SchemaError(ValidationError):
    """A JSON document does not match the expected schema.

    ``path`` is the dotted/bracketed location of the offending field.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericalError(MultiCropError, ArithmeticError):
    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class DegenerateCamera(NumericalError):
    pass


class BehindCamera(NumericalError):
    pass
