"""Even-subset calculus for 2-torsion of hyperelliptic Jacobians.

A genus-g hyperelliptic curve has 2g+2 Weierstrass labels; its 2-torsion
points are the even subsets modulo complement. Classes are stored as bitmask
ints in a fixed label universe, canonicalized to the representative that does
not contain the last universe label. Subgroups are reduced GF(2) row spans of
such bitmasks, so orders, membership, intersections and sums are exact rank
computations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import (
    NotLiftableRepresentation,
    OddParity,
    UniverseMismatch,
)

Label = Hashable


def format_label(label: Label) -> str:
    if isinstance(label, tuple):
        return "(" + ",".join(str(part) for part in label) + ")"
    return str(label)


def parse_label(s: str) -> Label:
    """Inverse of format_label. Tuple labels have the shape (slot, tag)
    where only the slot may be numeric; tags are always strings."""
    if s.startswith("(") and s.endswith(")"):
        head, *rest = s[1:-1].split(",")
        slot = int(head) if head.lstrip("-").isdigit() else head
        return (slot, *rest)
    return s


@dataclass(frozen=True)
class WUniverse:
    """Ordered universe of Weierstrass labels of one curve."""

    labels: tuple[Label, ...]

    def __post_init__(self):
        if len(self.labels) % 2 != 0 or len(self.labels) < 2:
            raise OddParity("universe size must be even and >= 2")
        if len(set(self.labels)) != len(self.labels):
            raise UniverseMismatch("universe labels must be unique")

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def genus(self) -> int:
        return self.size // 2 - 1

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    @property
    def last_bit(self) -> int:
        return 1 << (self.size - 1)

    def index(self, label: Label) -> int:
        try:
            return self.labels.index(label)
        except ValueError as exc:
            raise UniverseMismatch(f"label {label!r} not in universe") from exc

    def mask_of(self, labels: Iterable[Label]) -> int:
        mask = 0
        for lab in labels:
            mask |= 1 << self.index(lab)
        return mask

    def labels_of(self, mask: int) -> tuple[Label, ...]:
        return tuple(lab for i, lab in enumerate(self.labels) if (mask >> i) & 1)

    def to_json(self) -> list[str]:
        return [format_label(lab) for lab in self.labels]


def _canonical(universe: WUniverse, bits: int) -> int:
    if bits & universe.last_bit:
        bits ^= universe.full_mask
    return bits


@dataclass(frozen=True)
class TwoTorsionClass:
    """A 2-torsion class: an even label subset modulo complement."""

    universe: WUniverse
    bits: int  # canonical: even popcount, last label absent

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    def label_set(self) -> tuple[Label, ...]:
        return self.universe.labels_of(self.bits)

    def min_weight(self) -> int:
        w = bin(self.bits).count("1")
        return min(w, self.universe.size - w)

    def to_json(self) -> list[str]:
        return [format_label(lab) for lab in self.label_set()]

    def __repr__(self) -> str:
        return f"TwoTorsionClass{self.label_set()!r}"


def class_from_subset(universe: WUniverse, labels: Iterable[Label]) -> TwoTorsionClass:
    """Canonical class of an even label subset; S and its complement agree."""
    mask = universe.mask_of(labels)
    if bin(mask).count("1") % 2 != 0:
        raise OddParity("2-torsion classes need even subsets")
    return TwoTorsionClass(universe, _canonical(universe, mask))


def class_from_mask(universe: WUniverse, mask: int) -> TwoTorsionClass:
    if bin(mask).count("1") % 2 != 0:
        raise OddParity("2-torsion classes need even subsets")
    return TwoTorsionClass(universe, _canonical(universe, mask))


def zero_class(universe: WUniverse) -> TwoTorsionClass:
    return TwoTorsionClass(universe, 0)


def _same_universe(a: TwoTorsionClass, b: TwoTorsionClass) -> None:
    if a.universe != b.universe:
        raise UniverseMismatch("classes live on different universes")


def add(a: TwoTorsionClass, b: TwoTorsionClass) -> TwoTorsionClass:
    """Group law: symmetric difference of representatives, re-canonicalized."""
    _same_universe(a, b)
    return TwoTorsionClass(a.universe, _canonical(a.universe, a.bits ^ b.bits))


def weil_pairing(a: TwoTorsionClass, b: TwoTorsionClass) -> int:
    """The symplectic pairing (-1)^(|S ∩ T|), values in {+1, -1}.

    Well defined: replacing S by its complement changes |S ∩ T| by the even
    number |T| - 2 |S ∩ T|.
    """
    _same_universe(a, b)
    return -1 if bin(a.bits & b.bits).count("1") % 2 else 1


def _echelon(rows: Sequence[int]) -> list[int]:
    """Reduced echelon basis over GF(2), pivots at lowest set bits."""
    basis: list[int] = []
    for row in rows:
        for b in basis:
            low = b & -b
            if row & low:
                row ^= b
        if row:
            low = row & -row
            basis = [(b ^ row) if (b & low) else b for b in basis]
            basis.append(row)
    basis.sort(key=lambda r: r & -r)
    return basis


@dataclass(frozen=True)
class TwoTorsionSubgroup:
    """GF(2) span of classes; basis in reduced echelon form (canonical)."""

    universe: WUniverse
    basis: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.basis)

    def order(self) -> int:
        return 1 << self.rank

    def classes(self) -> tuple[TwoTorsionClass, ...]:
        return tuple(TwoTorsionClass(self.universe, b) for b in self.basis)

    def reduce_bits(self, bits: int) -> int:
        for b in self.basis:
            low = b & -b
            if bits & low:
                bits ^= b
        return bits

    def contains(self, c: TwoTorsionClass) -> bool:
        if c.universe != self.universe:
            raise UniverseMismatch("class not on the subgroup's universe")
        return self.reduce_bits(c.bits) == 0

    def elements(self) -> list[TwoTorsionClass]:
        """Enumerate all 2^rank elements (meant for small oracles)."""
        if self.rank > 22:
            raise ValueError("subgroup too large to enumerate")
        out = []
        for combo in range(1 << self.rank):
            bits = 0
            k = combo
            i = 0
            while k:
                if k & 1:
                    bits ^= self.basis[i]
                k >>= 1
                i += 1
            out.append(TwoTorsionClass(self.universe, bits))
        return out

    def to_json(self) -> dict:
        return {
            "universe": self.universe.to_json(),
            "order": self.order(),
            "rank": self.rank,
            "basis": [TwoTorsionClass(self.universe, b).to_json() for b in self.basis],
        }


def span(universe: WUniverse, generators: Iterable[TwoTorsionClass]) -> TwoTorsionSubgroup:
    rows = []
    for g in generators:
        if g.universe != universe:
            raise UniverseMismatch("generator on a different universe")
        rows.append(g.bits)
    return TwoTorsionSubgroup(universe, tuple(_echelon(rows)))


def order(group: TwoTorsionSubgroup) -> int:
    return group.order()


def member(group: TwoTorsionSubgroup, c: TwoTorsionClass) -> bool:
    return group.contains(c)


def subgroup_sum(g: TwoTorsionSubgroup, h: TwoTorsionSubgroup) -> TwoTorsionSubgroup:
    if g.universe != h.universe:
        raise UniverseMismatch("subgroups on different universes")
    return TwoTorsionSubgroup(g.universe, tuple(_echelon(list(g.basis) + list(h.basis))))


def intersect(g: TwoTorsionSubgroup, h: TwoTorsionSubgroup) -> TwoTorsionSubgroup:
    """Zassenhaus: reduce [A | A] stacked on [B | 0]; rows whose first block
    vanished have second blocks spanning the intersection."""
    if g.universe != h.universe:
        raise UniverseMismatch("subgroups on different universes")
    n = g.universe.size
    mask = (1 << n) - 1
    rows = [b | (b << n) for b in g.basis] + [b for b in h.basis]
    inter_rows = [row >> n for row in _echelon(rows) if row & mask == 0]
    return TwoTorsionSubgroup(g.universe, tuple(_echelon(inter_rows)))


def is_isotropic(group: TwoTorsionSubgroup) -> bool:
    """True iff the pairing is identically +1 on the subgroup (bilinear, so a
    check on basis pairs suffices)."""
    cls = group.classes()
    for i in range(len(cls)):
        for j in range(i + 1, len(cls)):
            if weil_pairing(cls[i], cls[j]) != 1:
                return False
    return True


class KleinType(enum.Enum):
    NON_ISOTROPIC_KLEIN = "NonIsotropicKlein"
    ISOTROPIC_KLEIN = "IsotropicKlein"
    DEGENERATE = "Degenerate"


def classify_klein(a: TwoTorsionClass, b: TwoTorsionClass) -> KleinType:
    _same_universe(a, b)
    group = span(a.universe, [a, b])
    if group.order() != 4:
        return KleinType.DEGENERATE
    if weil_pairing(a, b) == -1:
        return KleinType.NON_ISOTROPIC_KLEIN
    return KleinType.ISOTROPIC_KLEIN


# --- transport along covers -------------------------------------------------
#
# The cover edge is duck-typed: it must expose ``source_universe``,
# ``target_universe``, ``fibers`` (target label -> tuple of source labels,
# empty for the non-liftable labels) and ``proj`` (total map source label ->
# target label). Tower edges provide exactly this.


def _fiber_union(edge, bits: int) -> int | None:
    src: WUniverse = edge.source_universe
    tgt: WUniverse = edge.target_universe
    out = 0
    for i, lab in enumerate(tgt.labels):
        if not (bits >> i) & 1:
            continue
        fiber = edge.fibers.get(lab)
        if fiber is None:
            return None  # label without fiber data on this edge
        out ^= src.mask_of(fiber)
    return out


def pullback_2tor(edge, c: TwoTorsionClass) -> TwoTorsionClass:
    """Pull a class back along a cover: liftable labels are replaced by their
    Weierstrass fibers, the defining labels of an etale double cover drop out
    (their fibers are hyperelliptic-conjugate pairs, equivalent to zero)."""
    if c.universe != edge.target_universe:
        raise UniverseMismatch("class does not live on the cover's base")
    for rep in (c.bits, c.bits ^ c.universe.full_mask):
        out = _fiber_union(edge, rep)
        if out is not None:
            return class_from_mask(edge.source_universe, out)
    raise NotLiftableRepresentation(
        "no representative of the class is supported on labels with fiber data"
    )


def norm_2tor(edge, c: TwoTorsionClass) -> TwoTorsionClass:
    """Push a class forward: each cover label maps to its base image with
    multiplicity taken mod 2."""
    if c.universe != edge.source_universe:
        raise UniverseMismatch("class does not live on the cover")
    src: WUniverse = edge.source_universe
    tgt: WUniverse = edge.target_universe
    out = 0
    for i, lab in enumerate(src.labels):
        if not (c.bits >> i) & 1:
            continue
        image = edge.proj.get(lab)
        if image is None:
            raise NotLiftableRepresentation(f"label {lab!r} has no image on this edge")
        out ^= 1 << tgt.index(image)
    return class_from_mask(tgt, out)
