"""Exception hierarchy shared by the numerical modules and the CLI."""


class BiplateError(Exception):
    """Base class for all package errors."""


class DomainError(BiplateError, ValueError):
    """Invalid or unsupported domain geometry."""

    def __init__(self, message, node_index=None):
        super().__init__(message)
        self.node_index = node_index


class BoundaryConditionError(BiplateError, ValueError):
    """A (domain, boundary condition) pair or operation is not admissible."""


class AssemblyError(BiplateError):
    """The discrete operator could not be assembled (resolution, pivots)."""


class SolverError(BiplateError):
    """Eigen iteration failed or produced unphysical Ritz values."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class TraceError(BiplateError):
    """Boundary traces are inconsistent or cannot be extracted."""


class ConfigError(BiplateError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message, line=None, key=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key {key!r}")
        prefix = f"[{', '.join(loc)}] " if loc else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
