"""Exception types shared across the package.

The CLI maps these onto its exit-code contract (1 = validation or
evaluation failure, 2 = usage error, 3 = I/O error), so library code
raises the most specific class available instead of bare ValueError.
"""


class RamGraspError(Exception):
    """Base class for all package-specific errors."""


class OutOfImage(RamGraspError):
    """A box center lies outside the image bounds."""


class CellMismatch(RamGraspError):
    """Encoding target center is not inside the anchor's grid cell."""


class AngleBinMismatch(RamGraspError):
    """Encoding target angle is not inside the anchor's angular span."""


class ConfigMismatch(RamGraspError):
    """Two objects built against different grid configurations."""


class MalformedXml(RamGraspError):
    """Annotation XML could not be parsed."""


class MissingField(MalformedXml):
    """A required element is absent from an annotation file."""

    def __init__(self, name: str):
        super().__init__(f"missing required field: {name}")
        self.name = name


class AngleOutOfRange(RamGraspError):
    """Annotation angle falls outside [0, pi] radians."""


class EmptyTrainingSet(RamGraspError):
    """No boxes available to compute anchor dimensions from."""


class InsufficientEntries(RamGraspError):
    """Requested split sizes exceed the number of manifest entries."""


class EmptyDataset(RamGraspError):
    """Evaluation was asked to aggregate over zero images."""


class UnknownImageId(RamGraspError):
    """A prediction references an image_id absent from the manifest."""

    def __init__(self, image_id: str, line: int | None = None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown image_id {image_id!r}{loc}")
        self.image_id = image_id
        self.line = line


class MalformedJsonl(RamGraspError):
    """A prediction file line is not valid JSON or violates the schema."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DivergenceDetected(RamGraspError):
    """Training loss exceeded its divergence guard."""
