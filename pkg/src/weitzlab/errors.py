"""Exception types raised across the package."""


class WeitzlabError(Exception):
    """Base class for all package errors."""


class DimensionError(WeitzlabError, ValueError):
    """Raised for invalid dimensions, degrees or space/degree combinations."""


class SymmetryError(WeitzlabError, ValueError):
    """Raised when an input lacks a required symmetry."""


class DegeneratePlaneError(WeitzlabError, ValueError):
    """Raised when two vectors do not span a 2-plane."""


class MeshQualityError(WeitzlabError, ValueError):
    """Raised for degenerate triangles or negative cotan weights."""
