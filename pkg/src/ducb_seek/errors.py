class DucbSeekError(Exception):
    pass


class ConfigError(DucbSeekError):
    """Invalid scenario configuration. ``key`` names the offending config path."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class StructuralError(DucbSeekError, ValueError):
    """Shape or index mismatch between cooperating objects."""


class NumericalDegeneracyError(DucbSeekError, ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
