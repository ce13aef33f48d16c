"""Error taxonomy shared across the package (also drives CLI exit codes)."""


class KzholError(Exception):
    """Base class for all package errors."""

    category = "config"


class GeometryError(KzholError):
    """Invalid or degenerate path geometry (perturbation required, etc.)."""

    category = "geometry"


class NumericsError(KzholError):
    """Numerical failure: non-convergence, radius violation, tolerance blow-up."""

    category = "numerics"


class ConfigError(KzholError):
    """Inconsistent configuration or algebra/degree mismatch."""

    category = "config"
