"""Exception taxonomy shared across the package.

Every domain error derives from :class:`KleinPrymError` so callers (and the
CLI) can separate mathematical negatives from plain bugs.
"""

from __future__ import annotations


class KleinPrymError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateConfiguration(KleinPrymError):
    """Points that were required to be distinct coincide."""


class InvalidConfig(KleinPrymError):
    """A marked configuration does not fit the requested construction."""


class OddParity(KleinPrymError):
    """A label subset of odd cardinality where an even one is required."""


class UniverseMismatch(KleinPrymError):
    """Torsion classes from different label universes were combined."""


class NotLiftableRepresentation(KleinPrymError):
    """No representative of the class is expressible through the cover's labels."""


class InvalidRamification(KleinPrymError):
    """Ramification data violating parity or reducedness constraints."""


class InvalidCover(KleinPrymError):
    """Covering data that does not define a connected double cover."""


class NoKleinSubgroup(KleinPrymError):
    """Requested a Klein deck group on a curve of even genus."""


class UnsupportedNode(KleinPrymError):
    """No 2-torsion generator table is specified for this quotient curve."""


class SingularCurve(KleinPrymError):
    """A member of the explicit curve family fails the squarefree test."""


class InvalidDatum(KleinPrymError):
    """A Prym datum whose shape (genera, cardinalities) is malformed."""


class NotInPrymImage(KleinPrymError):
    """A well-formed Prym datum that cannot come from any configuration.

    Carries the violated constraint so failures are auditable rather than
    silent.
    """

    def __init__(self, violation: str, detail: str = ""):
        self.violation = violation
        self.detail = detail
        message = violation if not detail else f"{violation}: {detail}"
        super().__init__(message)
