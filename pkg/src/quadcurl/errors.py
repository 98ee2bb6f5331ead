"""Exception types shared across the package."""


class QuadCurlError(Exception):
    """Base class for all errors raised by this package."""


class GmshParseError(QuadCurlError):
    """A .msh file could not be parsed (bad header, version, or content)."""


class MeshError(QuadCurlError):
    """Invalid mesh data (bad indices, degenerate cells, ...)."""


class NonConformingMeshError(MeshError):
    """A face is shared by more than two tetrahedra."""


class SpaceError(QuadCurlError):
    """Incompatible or unsupported finite element space arguments."""


class QuadratureError(QuadCurlError):
    """Unsupported quadrature degree."""


class NotSPDError(QuadCurlError):
    """A matrix expected to be symmetric positive definite is not."""


class SingularSystemError(QuadCurlError):
    """A linear system factorization failed or left a large residual."""


class EigenSolveError(QuadCurlError):
    """An eigenvalue computation failed or returned too few modes."""


class UsageError(QuadCurlError):
    """Bad command line arguments."""
