"""Exception types raised by the sampling pipeline."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation (bad shape, order, range)."""


class StructureError(ValueError):
    """A matrix fails a structural invariant such as being Hermitian or unitary."""


class InconsistentTriangleError(ValueError):
    """Triangle rows do not interlace closely enough to build a fiber step."""
