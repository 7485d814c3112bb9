"""Exception hierarchy shared by every stage of the generator."""


class MMTaskGenError(Exception):
    """Base class for all package errors."""


class ParseError(MMTaskGenError):
    """Malformed XML input. ``line`` holds the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructureError(MMTaskGenError):
    """Kinematic tree is not a tree (cycles, multiple roots, dangling links)."""


class ValidationError(MMTaskGenError):
    """A model or record violates a field-level contract."""


class DomainError(MMTaskGenError, ValueError):
    """An argument lies outside the domain of an operation."""


class NoSupportError(MMTaskGenError):
    """No candidate plane satisfies the distance and alignment constraints."""


class SaturationError(MMTaskGenError):
    """Rejection sampling exhausted its attempt budget.

    ``failures`` maps constraint name to rejection count; ``dominant`` is the
    constraint that rejected most often.
    """

    def __init__(self, message, failures=None, attempts=0):
        self.failures = dict(failures or {})
        self.attempts = attempts
        self.dominant = max(self.failures, key=self.failures.get) if self.failures else None
        if self.dominant is not None:
            message = f"{message} (most rejections: {self.dominant})"
        super().__init__(message)


class NoGraspError(MMTaskGenError):
    """The object admits no antipodal grasp for the gripper."""


class NoPlacementError(MMTaskGenError):
    """The object footprint never fits on the support polygon."""


class ExhaustedError(MMTaskGenError):
    """Adaptive goal search ran out of candidates or budget."""

    def __init__(self, message, checks=0):
        super().__init__(f"{message} after {checks} feasibility checks")
        self.checks = checks


class NoSeedError(MMTaskGenError):
    """Inverse kinematics found no configuration to seed the optimizer."""


class TaskSpecError(MMTaskGenError):
    """A task specification is inconsistent with its scene or robot."""


class StageError(MMTaskGenError):
    """Wraps an error raised inside one pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
