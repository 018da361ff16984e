"""Exception types shared across the package."""


class SparseChanError(Exception):
    """Base class for all package errors."""


class NotInvertible(SparseChanError, ValueError):
    pass


class ModulusMismatch(SparseChanError, ValueError):
    pass


class InsufficientSlopes(SparseChanError, ValueError):
    pass


class EvenModulus(SparseChanError, ValueError):
    """Raised where an inverse of 2 mod N is needed but N is even."""


class InvalidEnergy(SparseChanError, ValueError):
    pass


class InvalidSparsity(SparseChanError, ValueError):
    pass


class InvalidEpsilon(SparseChanError, ValueError):
    pass


class OffGrid(SparseChanError, ValueError):
    """A continuous shift does not land on the lattice (1/W)Z x (1/T)Z."""


class InvalidAnalogParams(SparseChanError, ValueError):
    pass


class BandCountMismatch(SparseChanError, ValueError):
    pass


class SameLine(SparseChanError, ValueError):
    pass


class InvalidConfig(SparseChanError, ValueError):
    pass
