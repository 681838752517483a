"""Convex primitive shapes and their fits."""
from .fit import (
    DEFAULT_WEIGHTS,
    MIN_EXTENT,
    ConfigError,
    FitConfig,
    fit_all,
    fit_arrays,
    fit_capsule,
    fit_cylinder,
    fit_frustum,
    fit_obb,
    fit_sphere,
    fit_trapezoidal_prism,
    isotropic_basis,
)
from .shapes import (
    KIND_CODES,
    KIND_NAMES,
    Capsule,
    Cylinder,
    Frustum,
    Obb,
    Primitive,
    Sphere,
    TrapezoidalPrism,
    aabb,
    contains,
    from_params,
    quantize,
    volume,
)

__all__ = [
    "DEFAULT_WEIGHTS",
    "MIN_EXTENT",
    "ConfigError",
    "FitConfig",
    "fit_all",
    "fit_arrays",
    "fit_capsule",
    "fit_cylinder",
    "fit_frustum",
    "fit_obb",
    "fit_sphere",
    "fit_trapezoidal_prism",
    "isotropic_basis",
    "KIND_CODES",
    "KIND_NAMES",
    "Capsule",
    "Cylinder",
    "Frustum",
    "Obb",
    "Primitive",
    "Sphere",
    "TrapezoidalPrism",
    "aabb",
    "contains",
    "from_params",
    "quantize",
    "volume",
]
