"""Exception hierarchy shared across the toolkit."""


class Det3DError(Exception):
    """Base class for all toolkit errors."""


class NonPositiveDepth(Det3DError):
    """Point or decoded depth is at or behind the camera plane."""


class DegenerateInput(Det3DError):
    """6D rotation input has (near-)zero or (near-)parallel vectors."""


class DegenerateBox(Det3DError):
    """Box has a non-positive dimension or zero-area hull."""


class Overflow(Det3DError):
    """Decoded value is not finite."""


class MixedFrames(Det3DError):
    """Matching input spans multiple frames or class labels."""


class NoGroundTruth(Det3DError):
    """A class has no ground-truth boxes; it is skipped from means."""


class EmptyGroundTruth(Det3DError):
    """The whole evaluation set has no ground truth."""


class EmptyMask(Det3DError):
    """Depth loss mask selects no pixels."""


class LengthMismatch(Det3DError):
    """Per-layer loss lists disagree in length."""


class OutOfRange(Det3DError):
    """Metric component outside [0, 1]."""


class SchemaError(Det3DError):
    """Record violates the on-disk schema."""


class ParseError(SchemaError):
    """Malformed line in a JSONL file."""

    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class SchemaVersionError(SchemaError):
    """Unrecognized schema_version."""


class InvariantViolation(SchemaError):
    """A parsed value breaks a documented invariant."""

    def __init__(self, line_no, field, reason):
        self.line_no = line_no
        self.field = field
        self.reason = reason
        super().__init__(f"line {line_no}: field '{field}': {reason}")


class InvalidSpec(Det3DError):
    """Synthetic scene spec fails validation."""
