__all__ = [
    "DbarError", "ConfigError", "SmallNormViolation", "Divergence",
    "NonConvergence", "NonFiniteValue", "exit_code_for",
]


class DbarError(Exception):
    exit_code: int = 1


class ConfigError(DbarError):
    exit_code = 4

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


class SmallNormViolation(DbarError):
    exit_code = 2


class Divergence(SmallNormViolation):
    def __init__(self, msg: str, iterations: int):
        super().__init__(msg)
        self.iterations = iterations


class NonConvergence(DbarError):
    exit_code = 3

    def __init__(self, msg: str, iterations: int, last_change: float):
        super().__init__(msg)
        self.iterations = iterations
        self.last_change = last_change


class NonFiniteValue(DbarError, ValueError):
    pass


def exit_code_for(errors) -> int:
    """Process exit code for a batch of captured errors; small-norm failures outrank the rest."""
    errors = list(errors)
    if not errors:
        return 0
    if any(isinstance(e, SmallNormViolation) for e in errors):
        return SmallNormViolation.exit_code
    return max(e.exit_code for e in errors)
