"""Exception types shared across the pipeline.

Every error contract in the library raises one of these (or a plain
ValueError for simple argument violations), so callers and the CLI can
map failures to exit codes without string matching.
"""


class HaltError(Exception):
    """Base class for all pipeline errors."""


class ParseError(HaltError):
    """A dataset record is malformed; message names the line and field."""


class FormatError(HaltError):
    """An artifact file violates its wire format."""


class LayoutVersionError(FormatError):
    """A persisted feature matrix was written with a different layout version."""


class ConfigError(HaltError):
    """Unknown task, variant, or inconsistent run configuration."""


class DegenerateInputError(HaltError):
    """An operation received an empty token list or distribution list."""


class DegenerateLabelsError(HaltError):
    """A label vector contains only one class where both are required."""


class MissingScoreError(HaltError):
    """A lookup backend has no entry for the requested (id, window) key."""


class ScoreValidationError(HaltError):
    """A score-file distribution is too far from summing to one."""


class InfeasiblePrecisionError(HaltError):
    """No decision threshold satisfies the precision floor."""

    def __init__(self, floor: float, max_achievable: float):
        self.floor = floor
        self.max_achievable = max_achievable
        super().__init__(
            f"no threshold reaches precision >= {floor:.4f}; "
            f"best achievable precision is {max_achievable:.4f}"
        )


class StratificationError(HaltError):
    """A training fold is missing a class; try another seed or stratified mode."""
