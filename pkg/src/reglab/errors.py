"""Exception types shared across the package."""


class ReglabError(Exception):
    """Base class for all package errors."""


class DimensionError(ReglabError, ValueError):
    """A vector or matrix has the wrong shape.

    Attributes
    ----------
    name : str
        Name of the offending argument (``"x"``, ``"u"``, ``"B"``...).
    expected, got : tuple
        Expected and actual shapes.
    """

    def __init__(self, name, expected, got):
        self.name = name
        self.expected = tuple(expected)
        self.got = tuple(got)
        super().__init__(f"{name}: expected shape {self.expected}, got {self.got}")


class ScheduleError(ReglabError, ValueError):
    pass


class RolloutError(ReglabError, RuntimeError):
    """Closed-loop simulation aborted at ``step``."""

    def __init__(self, step, message):
        self.step = step
        super().__init__(f"step {step}: {message}")


class InputBoundViolation(ReglabError):
    """The input bound cannot hold with any finite gain at ``step``."""

    def __init__(self, step, message="input bound violated"):
        self.step = step
        super().__init__(f"{message} at step {step}")


class NotSummableError(ReglabError, ValueError):
    pass


class NotSchurStableError(ReglabError, ValueError):
    pass


class DwellTooShortError(ReglabError, ValueError):
    """The switch-product contraction factor is not below one.

    ``witness`` holds the gap sequence attaining the offending product.
    """

    def __init__(self, delta, witness):
        self.delta = delta
        self.witness = tuple(witness)
        super().__init__(
            f"switch products reach {delta:.6g} >= 1 (gaps {list(self.witness)}); increase phi"
        )


class ConfigError(ReglabError, ValueError):
    """Invalid scenario configuration; ``path`` is a JSON-pointer-style location."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path or '/'}: {message}")
