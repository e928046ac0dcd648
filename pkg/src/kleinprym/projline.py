"""Exact geometry of the projective line over the rationals.

Points are rational numbers together with a first-class point at infinity;
all arithmetic is exact, so projective-equivalence questions are decidable.
The module provides Moebius transformations, cross-ratios, canonical forms of
marked point configurations, and an equivalence test (with witness) that
respects role labels:

* ``w1, w2, ...``  numbered Weierstrass slots (freely permutable),
* ``x, y, z``      a distinguished triple (unordered by default),
* ``dist``         a pinned distinguished point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DegenerateConfiguration, InvalidConfig

Scalar = Fraction

TRIPLE_ROLES = ("x", "y", "z", "dist")
_TRIPLE_ORDER = {"dist": 0, "x": 1, "y": 2, "z": 3}


@dataclass(frozen=True)
class ProjPoint:
    """A point of P^1(Q): a rational value or infinity (``value is None``)."""

    value: Optional[Fraction]

    @staticmethod
    def of(v) -> "ProjPoint":
        if isinstance(v, ProjPoint):
            return v
        if v is None:
            return INF
        return ProjPoint(Fraction(v))

    @property
    def is_inf(self) -> bool:
        return self.value is None

    def sort_key(self):
        if self.value is None:
            return (1, Fraction(0))
        return (0, self.value)

    def __str__(self) -> str:
        return format_point(self)

    def __repr__(self) -> str:
        return f"ProjPoint({format_point(self)!r})"


INF = ProjPoint(None)


def format_point(p: ProjPoint) -> str:
    if p.value is None:
        return "inf"
    if p.value.denominator == 1:
        return str(p.value.numerator)
    return f"{p.value.numerator}/{p.value.denominator}"


def parse_point(s: str) -> ProjPoint:
    s = s.strip()
    if s in ("inf", "Inf", "INF", "oo"):
        return INF
    return ProjPoint(Fraction(s))


@dataclass(frozen=True)
class Mobius:
    """A projective transformation x -> (a x + b) / (c x + d), det != 0."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise DegenerateConfiguration("moebius matrix is singular")

    @staticmethod
    def of(a, b, c, d) -> "Mobius":
        return Mobius(Fraction(a), Fraction(b), Fraction(c), Fraction(d))

    def apply(self, p: ProjPoint) -> ProjPoint:
        if p.is_inf:
            if self.c == 0:
                return INF
            return ProjPoint(self.a / self.c)
        denom = self.c * p.value + self.d
        if denom == 0:
            return INF
        return ProjPoint((self.a * p.value + self.b) / denom)

    def compose(self, other: "Mobius") -> "Mobius":
        """Return self after other (matrix product self @ other)."""
        return Mobius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)

    def normalized(self) -> "Mobius":
        """Scale so the first nonzero entry of (a, b, c, d) equals 1."""
        for s in (self.a, self.b, self.c, self.d):
            if s != 0:
                return Mobius(self.a / s, self.b / s, self.c / s, self.d / s)
        raise AssertionError("unreachable: zero matrix")

    def is_identity(self) -> bool:
        return self.normalized() == IDENTITY

    def to_json(self) -> list:
        n = self.normalized()
        return [format_scalar(n.a), format_scalar(n.b), format_scalar(n.c), format_scalar(n.d)]


IDENTITY = Mobius(Fraction(1), Fraction(0), Fraction(0), Fraction(1))


def format_scalar(s: Fraction) -> str:
    if s.denominator == 1:
        return str(s.numerator)
    return f"{s.numerator}/{s.denominator}"


def _to_std(p: ProjPoint, q: ProjPoint, r: ProjPoint) -> Mobius:
    """The unique map sending (p, q, r) to (0, 1, inf)."""
    if len({p, q, r}) != 3:
        raise DegenerateConfiguration("anchor points must be pairwise distinct")
    if p.is_inf:
        # (q - r) / (x - r)
        return Mobius(Fraction(0), q.value - r.value, Fraction(1), -r.value)
    if q.is_inf:
        # (x - p) / (x - r)
        return Mobius(Fraction(1), -p.value, Fraction(1), -r.value)
    if r.is_inf:
        # (x - p) / (q - p)
        return Mobius(Fraction(1), -p.value, Fraction(0), q.value - p.value)
    return Mobius(
        q.value - r.value,
        -p.value * (q.value - r.value),
        q.value - p.value,
        -r.value * (q.value - p.value),
    )


def mobius_from_triples(src: Sequence[ProjPoint], dst: Sequence[ProjPoint]) -> Mobius:
    """The unique Moebius map with src[i] -> dst[i] for i = 0, 1, 2."""
    if len(src) != 3 or len(dst) != 3:
        raise DegenerateConfiguration("need exactly three points per triple")
    m_src = _to_std(*src)
    m_dst = _to_std(*dst)
    return m_dst.inverse().compose(m_src)


def cross_ratio(p: ProjPoint, q: ProjPoint, r: ProjPoint, s: ProjPoint) -> ProjPoint:
    """Cross-ratio normalized so that (0, 1, inf, t) -> t.

    Invariant under applying one Moebius map to all four arguments. The first
    three points must be pairwise distinct; the result is the image of ``s``
    under the map sending (p, q, r) to (0, 1, inf).
    """
    return _to_std(p, q, r).apply(s)


def _validate_roles(points: Sequence[ProjPoint], roles: Sequence[str]) -> None:
    if len(points) != len(roles):
        raise InvalidConfig("points and roles must have equal length")
    if len(set(points)) != len(points):
        raise DegenerateConfiguration("configuration points must be pairwise distinct")
    w_indices = []
    seen = set()
    for role in roles:
        if role in seen and role in TRIPLE_ROLES:
            raise InvalidConfig(f"role {role!r} used more than once")
        seen.add(role)
        if role.startswith("w"):
            try:
                w_indices.append(int(role[1:]))
            except ValueError as exc:
                raise InvalidConfig(f"bad Weierstrass role {role!r}") from exc
        elif role not in TRIPLE_ROLES:
            raise InvalidConfig(f"unknown role {role!r}")
    if sorted(w_indices) != list(range(1, len(w_indices) + 1)):
        raise InvalidConfig("Weierstrass roles must be w1..wk without gaps")


@dataclass(frozen=True)
class MarkedConfig:
    """Distinct points of P^1 with role labels attached by position."""

    points: tuple[ProjPoint, ...]
    roles: tuple[str, ...]

    def __post_init__(self):
        _validate_roles(self.points, self.roles)

    @staticmethod
    def make(pairs: Iterable[tuple[object, str]]) -> "MarkedConfig":
        pts, roles = [], []
        for value, role in pairs:
            pts.append(ProjPoint.of(value))
            roles.append(role)
        return MarkedConfig(tuple(pts), tuple(roles))

    def __len__(self) -> int:
        return len(self.points)

    def point_of(self, role: str) -> ProjPoint:
        for p, r in zip(self.points, self.roles):
            if r == role:
                return p
        raise KeyError(role)

    def has_role(self, role: str) -> bool:
        return role in self.roles

    def w_points(self) -> list[ProjPoint]:
        """Weierstrass-slot points ordered by their role index."""
        indexed = [(int(r[1:]), p) for p, r in zip(self.points, self.roles) if r.startswith("w")]
        return [p for _, p in sorted(indexed)]

    def triple_points(self) -> list[tuple[str, ProjPoint]]:
        got = [(r, p) for p, r in zip(self.points, self.roles) if r in TRIPLE_ROLES]
        return sorted(got, key=lambda rp: _TRIPLE_ORDER[rp[0]])

    def anchors(self) -> list[ProjPoint]:
        """Three anchor points: the distinguished triple if complete, else
        the three lowest-indexed Weierstrass points."""
        triple = self.triple_points()
        if len(triple) == 3:
            return [p for _, p in triple]
        ws = self.w_points()
        if len(ws) >= 3:
            return ws[:3]
        raise DegenerateConfiguration("need at least three points to anchor")

    def apply(self, m: Mobius) -> "MarkedConfig":
        return MarkedConfig(tuple(m.apply(p) for p in self.points), self.roles)

    def to_json(self) -> dict:
        return {
            "points": [format_point(p) for p in self.points],
            "roles": {str(i): r for i, r in enumerate(self.roles)},
        }

    @staticmethod
    def from_json(data: Mapping) -> "MarkedConfig":
        points = tuple(parse_point(s) for s in data["points"])
        roles_map = data["roles"]
        roles = tuple(roles_map[str(i)] for i in range(len(points)))
        return MarkedConfig(points, roles)


def canonical_form(config: MarkedConfig) -> MarkedConfig:
    """Move the anchors to (0, 1, inf) by the unique Moebius map.

    Idempotent; a configuration and any Moebius image of it share the same
    canonical form. Point order and role labels are untouched, so comparisons
    between canonical forms should go through :func:`config_key`.
    """
    if len(config) < 3:
        raise DegenerateConfiguration("canonical form needs at least three points")
    m = _to_std(*config.anchors())
    return config.apply(m)


def config_key(config: MarkedConfig, unordered_triple: bool = True):
    """Hashable key identifying the canonical form up to W-permutation."""
    c = canonical_form(config)
    wset = tuple(sorted((p.sort_key() for p in c.w_points())))
    triple = c.triple_points()
    dist = next((p for r, p in triple if r == "dist"), None)
    xyz = [(r, p) for r, p in triple if r != "dist"]
    if unordered_triple:
        tr_key = tuple(sorted(p.sort_key() for _, p in xyz))
    else:
        tr_key = tuple((r, p.sort_key()) for r, p in xyz)
    return (wset, tr_key, None if dist is None else dist.sort_key())


def _roles_compatible(ra: str, rb: str, unordered_triple: bool) -> bool:
    if ra.startswith("w") and rb.startswith("w"):
        return True
    if ra == "dist" or rb == "dist":
        return ra == rb
    if ra in TRIPLE_ROLES and rb in TRIPLE_ROLES:
        return True if unordered_triple else ra == rb
    return ra == rb


@dataclass(frozen=True)
class EquivalenceWitness:
    """A Moebius map plus the induced index relabeling a -> b."""

    mobius: Mobius
    index_map: tuple[int, ...]


def _match_under(m: Mobius, a: MarkedConfig, b: MarkedConfig,
                 unordered_triple: bool) -> Optional[EquivalenceWitness]:
    position = {p: i for i, p in enumerate(b.points)}
    index_map = []
    for p, role in zip(a.points, a.roles):
        image = m.apply(p)
        j = position.get(image)
        if j is None or not _roles_compatible(role, b.roles[j], unordered_triple):
            return None
        index_map.append(j)
    if len(set(index_map)) != len(index_map):
        return None
    return EquivalenceWitness(m.normalized(), tuple(index_map))


def equivalent(a: MarkedConfig, b: MarkedConfig, unordered_triple: bool = True
               ) -> tuple[bool, Optional[EquivalenceWitness]]:
    """Decide projective equivalence respecting roles, with witness.

    Tries every ordered triple of points of ``a`` whose roles can land on the
    anchors of ``b``, builds the unique Moebius map, and verifies it carries
    the whole configuration across. Exact, sound and complete.
    """
    if len(a) != len(b):
        return False, None
    try:
        b_anchor_pts = b.anchors()
    except DegenerateConfiguration:
        return False, None
    b_pos = {p: i for i, p in enumerate(b.points)}
    b_anchor_roles = [b.roles[b_pos[p]] for p in b_anchor_pts]
    for cand in itertools.permutations(range(len(a)), 3):
        if not all(
            _roles_compatible(a.roles[i], br, unordered_triple)
            for i, br in zip(cand, b_anchor_roles)
        ):
            continue
        m = mobius_from_triples([a.points[i] for i in cand], b_anchor_pts)
        witness = _match_under(m, a, b, unordered_triple)
        if witness is not None:
            return True, witness
    return False, None
