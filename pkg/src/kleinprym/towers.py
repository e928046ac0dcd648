"""Symbolic covering towers over marked configurations on the line.

A tower is a DAG of curve nodes (genus, Weierstrass label universe, branch
positions) and cover edges (degree 2 or 4, kind, label projection, branch
data, defining class). Builders assemble the full commuting diagram for each
supported case from a marked configuration; a separate validator re-derives
genus bookkeeping (Riemann-Hurwitz and the Accola identity), the
hyperellipticity criteria of every edge, label-level commutativity, and the
freeness of the Klein deck action on the top Weierstrass labels.

Cases:

* ``b2_double``     double cover branched in 2 points with its Prym curve,
* ``etale_double`` / ``b4_double``   the etale / 4-branched double-cover pair,
* ``etale_klein``   the etale Klein tower (genus 4g-3 top over genus g),
* ``branched12``    the Klein tower branched in 12 points (genus 4g+3 top),
* ``mixed8`` / ``mixed4``   the same towers rebased at a branched quotient,
  with a distinguished point recorded by the ``dist`` role.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import (
    DegenerateConfiguration,
    InvalidConfig,
    InvalidCover,
    InvalidRamification,
    NoKleinSubgroup,
)
from .projline import (
    MarkedConfig,
    ProjPoint,
    canonical_form,
    format_point,
    parse_point,
)
from .torsion import (
    Label,
    TwoTorsionClass,
    TwoTorsionSubgroup,
    WUniverse,
    class_from_subset,
    format_label,
    parse_label,
    span,
    weil_pairing,
)

GAMMA = ("1", "s", "t", "st")
_GBITS = {"1": 0, "s": 1, "t": 2, "st": 3}
INVOLUTIONS = ("s", "t", "st", "is", "it", "ist")

# The four Klein subgroups of <iota, sigma, tau> avoiding iota, named by
# their three nontrivial involutions.
KLEIN_SUBGROUPS = (
    frozenset({"s", "t", "st"}),
    frozenset({"s", "it", "ist"}),
    frozenset({"t", "is", "ist"}),
    frozenset({"st", "is", "it"}),
)


def gamma_mul(a: str, b: str) -> str:
    return GAMMA[_GBITS[a] ^ _GBITS[b]]


def deck_subgroup(elems: Iterable[str]) -> frozenset:
    """Subgroup of {1, s, t, st} generated by the given elements."""
    group = {"1"}
    frontier = set(elems)
    while frontier:
        e = frontier.pop()
        if e in group:
            continue
        frontier.update(gamma_mul(e, h) for h in group)
        group.add(e)
    return frozenset(group)


def label_orbit(label: Label, elems: Iterable[str]) -> frozenset:
    """Orbit of a top label (i, gamma) under the group generated by elems."""
    i, g = label
    return frozenset((i, gamma_mul(e, g)) for e in deck_subgroup(elems))


# --- elementary genus bookkeeping --------------------------------------------


def rh_genus(base_genus: int, degree: int, simple_ram_count: int) -> int:
    """Cover genus g' with 2g' - 2 = degree (2b - 2) + ram."""
    if base_genus < 0 or degree < 1 or simple_ram_count < 0:
        raise InvalidRamification("inputs must be nonnegative (degree positive)")
    total = degree * (2 * base_genus - 2) + simple_ram_count
    if total % 2 != 0:
        raise InvalidRamification("ramification parity violation")
    genus = (total + 2) // 2
    if genus < 0:
        raise InvalidRamification("negative genus")
    return genus


def fixed_point_profile(genus: int, which: Optional[str] = None):
    """Allowed fixed-point counts of a non-hyperelliptic involution.

    Even genus forces exactly 2 fixed points for the involution and its
    iota-twin; odd genus forces the unordered split {0, 4}. With ``which``
    in {"tau", "iota_tau"} the per-involution count set is returned,
    otherwise the set of allowed ordered pairs.
    """
    if genus < 1:
        raise InvalidRamification("genus must be at least 1")
    if which not in (None, "tau", "iota_tau"):
        raise ValueError(f"unknown involution selector {which!r}")
    if genus % 2 == 0:
        return frozenset({2}) if which else frozenset({(2, 2)})
    if which:
        return frozenset({0, 4})
    return frozenset({(0, 4), (4, 0)})


def accola_check(g_top: int, g0: int, g_sigma: int, g_tau: int, g_sigmatau: int) -> bool:
    """Accola's identity for a Klein action: 2 g + 4 g0 = 2 (sum of quotients)."""
    return 2 * g_top + 4 * g0 == 2 * (g_sigma + g_tau + g_sigmatau)


def require_klein_genus(top_genus: int) -> None:
    """A Klein deck group needs 4 | number of Weierstrass labels."""
    if top_genus % 2 == 0:
        raise NoKleinSubgroup(
            f"genus {top_genus} is even: no Klein subgroup of involutions exists"
        )


class KleinClass(enum.Enum):
    NONE_EXISTS = "NoneExists"
    UNIQUE_FPF = "UniqueFPF"
    UNIQUE_WITH_FIXED_POINTS = "UniqueWithFixedPoints"


def _involution_genus(top_genus: int, fixed: int) -> Optional[int]:
    total = 2 * top_genus + 2 - fixed
    if total % 4 != 0:
        return None
    q = total // 4
    return q if q >= 0 else None


def klein_classification(genus: int, with_certificate: bool = False):
    """Classify Klein subgroups on a hyperelliptic curve of the given genus.

    Exhaustive search over fixed-point assignments: each of the three
    involution pairs (alpha, iota*alpha) gets a profile allowed by
    :func:`fixed_point_profile`; every one of the four candidate Klein
    subgroups must then admit integral quotient genera (Riemann-Hurwitz for
    the involutions and for the 4:1 quotient) satisfying the Accola identity.
    The deck group must also permute the 2g+2 Weierstrass labels freely,
    since double-cover ramification is never a Weierstrass point; this kills
    every even genus. The consistent assignments certify uniqueness.
    """
    if genus < 2:
        raise InvalidRamification("classification needs genus >= 2")
    labels_free = (2 * genus + 2) % 4 == 0
    per_inv = fixed_point_profile(genus, "tau") if genus % 2 else frozenset({2})

    consistent = []
    for a, b, c in itertools.product(sorted(per_inv), repeat=3):
        fixed = {
            "s": a, "is": 4 - a if genus % 2 else 2,
            "t": b, "it": 4 - b if genus % 2 else 2,
            "st": c, "ist": 4 - c if genus % 2 else 2,
        }
        subgroup_data = []
        ok = True
        for sub in KLEIN_SUBGROUPS:
            quotients = []
            for inv in sorted(sub):
                q = _involution_genus(genus, fixed[inv])
                if q is None:
                    ok = False
                    break
                quotients.append(q)
            if not ok:
                break
            ram_total = sum(fixed[inv] for inv in sub)
            num = 2 * genus - 2 - ram_total + 8
            if num % 8 != 0 or num < 0:
                ok = False
                break
            g0 = num // 8
            if not accola_check(genus, g0, *quotients):
                ok = False
                break
            subgroup_data.append({
                "involutions": sorted(sub),
                "fixed_counts": [fixed[inv] for inv in sorted(sub)],
                "quotient_genus": g0,
                "involution_genera": quotients,
            })
        if ok:
            consistent.append({"assignment": fixed, "subgroups": subgroup_data})

    fpf_counts = set()
    fix_counts = set()
    for item in consistent:
        n_fpf = sum(1 for s in item["subgroups"] if all(f == 0 for f in s["fixed_counts"]))
        n_fix = sum(1 for s in item["subgroups"] if all(f > 0 for f in s["fixed_counts"]))
        fpf_counts.add(n_fpf)
        fix_counts.add(n_fix)

    if not labels_free or not consistent:
        result = KleinClass.NONE_EXISTS
    elif fpf_counts == {1} and fix_counts == {0}:
        result = KleinClass.UNIQUE_FPF
    elif fix_counts == {1} and fpf_counts == {0}:
        result = KleinClass.UNIQUE_WITH_FIXED_POINTS
    else:
        result = KleinClass.NONE_EXISTS

    if with_certificate:
        return result, {
            "genus": genus,
            "labels_free": labels_free,
            "consistent_assignments": len(consistent),
            "fpf_subgroups_per_assignment": sorted(fpf_counts),
            "fixed_subgroups_per_assignment": sorted(fix_counts),
        }
    return result


# --- points on a curve used in branch data ------------------------------------
#
# ("w", label)        the Weierstrass point with that label
# ("over", pos, k)    sheet k of the fiber over the P1 position pos


def conj_point(node: "CurveNode", desc: tuple) -> tuple:
    """Hyperelliptic involution on branch-point descriptors."""
    if desc[0] == "w":
        return desc
    kind, pos, k = desc
    if node.branch_image and pos in set(node.branch_image.values()):
        return desc  # ramified fiber: a single iota-fixed point
    return (kind, pos, k ^ 1)


def check_b2_hyperelliptic(base: "CurveNode", branch_pair: Sequence[tuple],
                           defining_class) -> bool:
    """Double covers branched in 2 points stay hyperelliptic iff the branch
    pair is iota-conjugate and the defining bundle is O(w) for a Weierstrass
    point w of the base."""
    p, q = branch_pair
    if p == q:
        raise InvalidRamification("branch points coincide")
    if conj_point(base, p) != q:
        return False
    if not (isinstance(defining_class, tuple) and defining_class[0] == "O(w)"):
        return False
    return base.universe is not None and defining_class[1] in base.universe.labels


def check_b4_hyperelliptic(base: "CurveNode", branch_divisor: Sequence[tuple],
                           defining_class) -> bool:
    """Double covers branched in 4 points stay hyperelliptic iff the branch
    divisor is reduced, consists of two iota-conjugate pairs, and the
    defining bundle is the hyperelliptic class."""
    if len(branch_divisor) != 4 or len(set(branch_divisor)) != 4:
        raise InvalidRamification("branch divisor must be reduced of degree 4")
    if defining_class != ("O(h)",):
        return False
    remaining = list(branch_divisor)
    while remaining:
        p = remaining.pop()
        q = conj_point(base, p)
        if q not in remaining:
            return False
        remaining.remove(q)
    return True


def check_etale_hyperelliptic(defining_class: TwoTorsionClass) -> bool:
    """An etale double cover of a hyperelliptic curve is hyperelliptic iff
    its defining class is a difference of two Weierstrass points."""
    if defining_class.is_zero:
        raise InvalidCover("the zero class does not define a connected double cover")
    return defining_class.min_weight() == 2


# --- tower data model ---------------------------------------------------------


@dataclass
class CurveNode:
    name: str
    genus: int
    universe: Optional[WUniverse]
    display: str = ""
    branch_image: dict = field(default_factory=dict)  # label -> ProjPoint
    marks: dict = field(default_factory=dict)         # label -> role tag

    def __post_init__(self):
        if not self.display:
            self.display = self.name
        if self.universe is not None and self.genus >= 1:
            if self.universe.size != 2 * self.genus + 2:
                raise InvalidConfig(
                    f"node {self.name}: {self.universe.size} labels for genus {self.genus}"
                )


Defining = Union[TwoTorsionClass, TwoTorsionSubgroup, tuple, None]


@dataclass
class CoverEdge:
    source: CurveNode
    target: CurveNode
    degree: int
    kind: str  # etale | b2 | b4 | hyperelliptic_to_P1
    proj: Optional[dict] = None       # source label -> target label (total)
    branch: tuple = ()                # descriptors on the target (curve) or P1 points
    defining: Defining = None
    deck: tuple = ()                  # label-action deck elements (subset of GAMMA)

    def __post_init__(self):
        if self.kind not in ("etale", "b2", "b4", "hyperelliptic_to_P1"):
            raise InvalidConfig(f"unknown edge kind {self.kind!r}")
        if self.degree not in (2, 4):
            raise InvalidConfig("cover degree must be 2 or 4")

    @property
    def source_universe(self) -> WUniverse:
        return self.source.universe

    @property
    def target_universe(self) -> WUniverse:
        return self.target.universe

    @property
    def fibers(self) -> dict:
        """Target label -> tuple of source labels (empty when non-liftable)."""
        if self._fibers is None:
            fib = {lab: [] for lab in self.target.universe.labels}
            for src_lab, tgt_lab in self.proj.items():
                fib[tgt_lab].append(src_lab)
            self._fibers = {
                lab: tuple(sorted(v, key=format_label)) for lab, v in fib.items()
            }
        return self._fibers

    _fibers: Optional[dict] = field(default=None, repr=False, compare=False)

    @property
    def dropped(self) -> frozenset:
        return frozenset(lab for lab, fib in self.fibers.items() if not fib)

    def ram_count(self) -> int:
        if self.kind == "etale":
            return 0
        if self.kind == "b2":
            return 2
        if self.kind == "b4":
            return 4
        return 2 * self.source.genus + 2  # hyperelliptic quotient


@dataclass
class Tower:
    case: str
    g: int
    config: MarkedConfig
    nodes: dict
    edges: list
    deck_action: dict       # "s"/"t" -> permutation dict on top labels
    fixed_counts: dict      # involution name -> fixed-point count on the top curve
    top: str
    base: str               # the Prym base node for this case
    subgroup_nodes: dict    # frozenset of involutions -> quotient node name

    def node(self, name: str) -> CurveNode:
        return self.nodes[name]

    def edge(self, source: str, target: str) -> CoverEdge:
        for e in self.edges:
            if e.source.name == source and e.target.name == target:
                return e
        raise KeyError(f"no edge {source} -> {target}")

    def top_universe(self) -> WUniverse:
        return self.nodes[self.top].universe

    def signature(self) -> tuple:
        nodes = tuple(sorted((n.name, n.genus, 0 if n.universe is None else n.universe.size)
                             for n in self.nodes.values()))
        edges = tuple(sorted((e.source.name, e.target.name, e.degree, e.kind)
                             for e in self.edges))
        return (self.case, self.g, nodes, edges)


# --- builders -----------------------------------------------------------------


def _triple_slots(config: MarkedConfig, need_dist: bool) -> dict:
    """Map the construction slots x, y, z onto config roles.

    Mixed cases replace the x tag by dist; the distinguished point always
    occupies the x slot.
    """
    triple = dict(config.triple_points())
    if need_dist:
        if set(triple) != {"dist", "y", "z"}:
            raise InvalidConfig("mixed cases need roles dist, y, z")
        return {"x": triple["dist"], "y": triple["y"], "z": triple["z"]}
    if set(triple) != {"x", "y", "z"}:
        raise InvalidConfig("this case needs a full distinguished triple x, y, z")
    return {"x": triple["x"], "y": triple["y"], "z": triple["z"]}


def _coset_rep(g: str, elems: frozenset) -> str:
    coset = {gamma_mul(e, g) for e in elems} | {g}
    return min(coset, key=GAMMA.index)


def _orbit_proj(n: int, elems: frozenset) -> dict:
    """Projection of top labels (i, gamma) onto coset labels (i, rep)."""
    return {
        (i, g): (i, _coset_rep(g, elems))
        for i in range(1, n + 1)
        for g in GAMMA
    }


def _top_universe(n: int) -> WUniverse:
    return WUniverse(tuple((i, g) for i in range(1, n + 1) for g in GAMMA))


def _coset_universe(n: int, elems: frozenset, extra: tuple = ()) -> WUniverse:
    reps = sorted({_coset_rep(g, elems) for g in GAMMA}, key=GAMMA.index)
    labels = tuple((i, r) for i in range(1, n + 1) for r in reps) + tuple(extra)
    return WUniverse(labels)


def _deck_action(n: int) -> dict:
    return {
        e: {(i, g): (i, gamma_mul(e, g)) for i in range(1, n + 1) for g in GAMMA}
        for e in ("s", "t")
    }


def _pair_over(pos: ProjPoint) -> tuple:
    return (("over", pos, 0), ("over", pos, 1))


def _quad_over(pos: ProjPoint) -> tuple:
    return (("over", pos, 0), ("over", pos, 1), ("over", pos, 2), ("over", pos, 3))


def _build_etale_klein(config: MarkedConfig, case: str) -> Tower:
    ws = config.w_points()
    n = len(ws)
    if n < 3 or n % 2 == 0:
        raise InvalidConfig("etale Klein tower needs 2g-1 Weierstrass slots, g >= 2")
    g = (n + 1) // 2
    slots = _triple_slots(config, need_dist=case == "mixed8")
    px, py, pz = slots["x"], slots["y"], slots["z"]
    require_klein_genus(4 * g - 3)

    w_labels = tuple(f"w{i}" for i in range(1, n + 1))
    positions = dict(zip(w_labels, ws))

    p1 = CurveNode("P1", 0, None, display="P1")
    H = CurveNode(
        "H", g, WUniverse(w_labels + ("x", "y", "z")),
        branch_image={**positions, "x": px, "y": py, "z": pz},
        marks={"x": "x", "y": "y", "z": "z"},
    )
    hx = CurveNode("H_x", g - 1, WUniverse(w_labels + ("x",)),
                   branch_image={**positions, "x": px}, marks={"x": "x"})
    hy = CurveNode("H_y", g - 1, WUniverse(w_labels + ("y",)),
                   branch_image={**positions, "y": py}, marks={"y": "y"})
    hz = CurveNode("H_z", g - 1, WUniverse(w_labels + ("z",)),
                   branch_image={**positions, "z": pz}, marks={"z": "z"})

    sub_s = frozenset({"s"})
    sub_t = frozenset({"t"})
    sub_st = frozenset({"st"})
    cx = CurveNode("C_x", 2 * g - 1, _coset_universe(n, sub_s, (("x", "0"), ("x", "1"))))
    cy = CurveNode("C_y", 2 * g - 1, _coset_universe(n, sub_t, (("y", "0"), ("y", "1"))))
    cz = CurveNode("C_z", 2 * g - 1, _coset_universe(n, sub_st, (("z", "0"), ("z", "1"))))
    top = CurveNode("Ctilde", 4 * g - 3, _top_universe(n), display="C~")

    uH = H.universe
    eta = class_from_subset(uH, ("x", "y"))
    xi = class_from_subset(uH, ("y", "z"))

    def mid_proj(elems: frozenset, extra_label: str) -> dict:
        proj = {}
        for i in range(1, n + 1):
            for rep in {_coset_rep(gm, elems) for gm in GAMMA}:
                proj[(i, rep)] = f"w{i}"
        proj[(extra_label, "0")] = extra_label
        proj[(extra_label, "1")] = extra_label
        return proj

    edges = [
        CoverEdge(H, p1, 2, "hyperelliptic_to_P1", branch=tuple(H.branch_image.values())),
        CoverEdge(hx, p1, 2, "hyperelliptic_to_P1", branch=tuple(hx.branch_image.values())),
        CoverEdge(hy, p1, 2, "hyperelliptic_to_P1", branch=tuple(hy.branch_image.values())),
        CoverEdge(hz, p1, 2, "hyperelliptic_to_P1", branch=tuple(hz.branch_image.values())),
        CoverEdge(cx, H, 2, "etale", proj=mid_proj(sub_s, "x"), defining=xi),
        CoverEdge(cy, H, 2, "etale", proj=mid_proj(sub_t, "y"),
                  defining=class_from_subset(uH, ("x", "z"))),
        CoverEdge(cz, H, 2, "etale", proj=mid_proj(sub_st, "z"), defining=eta),
        CoverEdge(top, cx, 2, "etale", proj=_orbit_proj(n, sub_s),
                  defining=class_from_subset(cx.universe, (("x", "0"), ("x", "1"))),
                  deck=("s",)),
        CoverEdge(top, cy, 2, "etale", proj=_orbit_proj(n, sub_t),
                  defining=class_from_subset(cy.universe, (("y", "0"), ("y", "1"))),
                  deck=("t",)),
        CoverEdge(top, cz, 2, "etale", proj=_orbit_proj(n, sub_st),
                  defining=class_from_subset(cz.universe, (("z", "0"), ("z", "1"))),
                  deck=("st",)),
        CoverEdge(top, H, 4, "etale",
                  proj={(i, gm): f"w{i}" for i in range(1, n + 1) for gm in GAMMA},
                  defining=span(uH, [eta, xi]), deck=("s", "t")),
        CoverEdge(cx, hx, 2, "b4", proj=mid_proj(sub_s, "x"),
                  branch=_pair_over(py) + _pair_over(pz), defining=("O(h)",)),
        CoverEdge(cy, hy, 2, "b4", proj=mid_proj(sub_t, "y"),
                  branch=_pair_over(px) + _pair_over(pz), defining=("O(h)",)),
        CoverEdge(cz, hz, 2, "b4", proj=mid_proj(sub_st, "z"),
                  branch=_pair_over(px) + _pair_over(py), defining=("O(h)",)),
    ]

    nodes = {nd.name: nd for nd in (p1, H, hx, hy, hz, cx, cy, cz, top)}
    return Tower(
        case=case, g=g, config=config, nodes=nodes, edges=edges,
        deck_action=_deck_action(n),
        fixed_counts={"s": 0, "t": 0, "st": 0, "is": 4, "it": 4, "ist": 4},
        top="Ctilde", base="H" if case == "etale_klein" else "H_x",
        subgroup_nodes={
            frozenset({"s", "t", "st"}): "H",
            frozenset({"s", "it", "ist"}): "H_x",
            frozenset({"t", "is", "ist"}): "H_y",
            frozenset({"st", "is", "it"}): "H_z",
        },
    )


def _build_branched12(config: MarkedConfig, case: str) -> Tower:
    ws = config.w_points()
    n = len(ws)
    if n < 4 or n % 2 != 0:
        raise InvalidConfig("branched Klein tower needs 2g+2 Weierstrass slots, g >= 1")
    g = n // 2 - 1
    slots = _triple_slots(config, need_dist=case == "mixed4")
    px, py, pz = slots["x"], slots["y"], slots["z"]
    require_klein_genus(4 * g + 3)

    w_labels = tuple(f"w{i}" for i in range(1, n + 1))
    positions = dict(zip(w_labels, ws))

    p1 = CurveNode("P1", 0, None, display="P1")
    E = CurveNode("E", g, WUniverse(w_labels), branch_image=dict(positions))
    hx = CurveNode("H_x", g + 1, WUniverse(w_labels + ("uy", "uz")),
                   branch_image={**positions, "uy": py, "uz": pz},
                   marks={"uy": "y", "uz": "z"}, display="H_{s,st}")
    hy = CurveNode("H_y", g + 1, WUniverse(w_labels + ("ux", "uz")),
                   branch_image={**positions, "ux": px, "uz": pz},
                   marks={"ux": "x", "uz": "z"}, display="H_{t,is}")
    hz = CurveNode("H_z", g + 1, WUniverse(w_labels + ("ux", "uy")),
                   branch_image={**positions, "ux": px, "uy": py},
                   marks={"ux": "x", "uy": "y"}, display="H_{s,it}")

    sub_st = frozenset({"st"})
    sub_s = frozenset({"s"})
    sub_t = frozenset({"t"})
    tx = CurveNode("T_x", 2 * g + 1, _coset_universe(n, sub_st), display="T_st")
    ty = CurveNode("T_y", 2 * g + 1, _coset_universe(n, sub_s), display="T_is")
    tz = CurveNode("T_z", 2 * g + 1, _coset_universe(n, sub_t), display="T_it")
    cs = CurveNode("C_s", 2 * g + 2, _coset_universe(n, sub_s, (("y", "0"), ("y", "1"))),
                   display="C_sigma")
    ct = CurveNode("C_t", 2 * g + 2, _coset_universe(n, sub_t, (("z", "0"), ("z", "1"))),
                   display="C_tau")
    cist = CurveNode("C_ist", 2 * g + 2, _coset_universe(n, sub_st, (("x", "0"), ("x", "1"))),
                     display="C_ist")
    top = CurveNode("Ctilde", 4 * g + 3, _top_universe(n), display="C~")

    def coset_proj(elems: frozenset, extra: Optional[tuple] = None) -> dict:
        proj = {}
        for i in range(1, n + 1):
            for rep in {_coset_rep(gm, elems) for gm in GAMMA}:
                proj[(i, rep)] = f"w{i}"
        if extra:
            extra_label, target = extra
            proj[(extra_label, "0")] = target
            proj[(extra_label, "1")] = target
        return proj

    edges = [
        CoverEdge(E, p1, 2, "hyperelliptic_to_P1", branch=tuple(E.branch_image.values())),
        CoverEdge(hx, p1, 2, "hyperelliptic_to_P1", branch=tuple(hx.branch_image.values())),
        CoverEdge(hy, p1, 2, "hyperelliptic_to_P1", branch=tuple(hy.branch_image.values())),
        CoverEdge(hz, p1, 2, "hyperelliptic_to_P1", branch=tuple(hz.branch_image.values())),
        # T_beta -> E, branched at the conjugate pairs over two triple points
        CoverEdge(tx, E, 2, "b4", proj=coset_proj(sub_st),
                  branch=_pair_over(py) + _pair_over(pz), defining=("O(h)",)),
        CoverEdge(ty, E, 2, "b4", proj=coset_proj(sub_s),
                  branch=_pair_over(px) + _pair_over(pz), defining=("O(h)",)),
        CoverEdge(tz, E, 2, "b4", proj=coset_proj(sub_t),
                  branch=_pair_over(px) + _pair_over(py), defining=("O(h)",)),
        # top -> T_beta, branched at the four points over the remaining triple point
        CoverEdge(top, tx, 2, "b4", proj=_orbit_proj(n, sub_st),
                  branch=_quad_over(px), defining=("O(h)",), deck=("st",)),
        CoverEdge(top, ty, 2, "b4", proj=_orbit_proj(n, sub_s),
                  branch=_quad_over(py), defining=("O(h)",), deck=("s",)),
        CoverEdge(top, tz, 2, "b4", proj=_orbit_proj(n, sub_t),
                  branch=_quad_over(pz), defining=("O(h)",), deck=("t",)),
        # top -> C_alpha, etale
        CoverEdge(top, cs, 2, "etale", proj=_orbit_proj(n, sub_s),
                  defining=class_from_subset(cs.universe, (("y", "0"), ("y", "1"))),
                  deck=("s",)),
        CoverEdge(top, ct, 2, "etale", proj=_orbit_proj(n, sub_t),
                  defining=class_from_subset(ct.universe, (("z", "0"), ("z", "1"))),
                  deck=("t",)),
        CoverEdge(top, cist, 2, "etale", proj=_orbit_proj(n, sub_st),
                  defining=class_from_subset(cist.universe, (("x", "0"), ("x", "1"))),
                  deck=("st",)),
        # T_beta -> H_{alpha,beta}, etale, defined by the difference of the u points
        CoverEdge(tx, hx, 2, "etale", proj=coset_proj(sub_st),
                  defining=class_from_subset(hx.universe, ("uy", "uz"))),
        CoverEdge(ty, hy, 2, "etale", proj=coset_proj(sub_s),
                  defining=class_from_subset(hy.universe, ("ux", "uz"))),
        CoverEdge(tz, hz, 2, "etale", proj=coset_proj(sub_t),
                  defining=class_from_subset(hz.universe, ("ux", "uy"))),
        # C_alpha -> H_{alpha,beta}, branched in 2
        CoverEdge(cs, hx, 2, "b2", proj=coset_proj(sub_s, ("y", "uy")),
                  branch=_pair_over(px), defining=("O(w)", "uz")),
        CoverEdge(cs, hz, 2, "b2", proj=coset_proj(sub_s, ("y", "uy")),
                  branch=_pair_over(pz), defining=("O(w)", "ux")),
        CoverEdge(ct, hx, 2, "b2", proj=coset_proj(sub_t, ("z", "uz")),
                  branch=_pair_over(px), defining=("O(w)", "uy")),
        CoverEdge(ct, hy, 2, "b2", proj=coset_proj(sub_t, ("z", "uz")),
                  branch=_pair_over(py), defining=("O(w)", "ux")),
        CoverEdge(cist, hy, 2, "b2", proj=coset_proj(sub_st, ("x", "ux")),
                  branch=_pair_over(py), defining=("O(w)", "uz")),
        CoverEdge(cist, hz, 2, "b2", proj=coset_proj(sub_st, ("x", "ux")),
                  branch=_pair_over(pz), defining=("O(w)", "uy")),
    ]

    nodes = {nd.name: nd for nd in (p1, E, hx, hy, hz, tx, ty, tz, cs, ct, cist, top)}
    return Tower(
        case=case, g=g, config=config, nodes=nodes, edges=edges,
        deck_action=_deck_action(n),
        fixed_counts={"s": 0, "t": 0, "ist": 0, "st": 4, "is": 4, "it": 4},
        top="Ctilde", base="E" if case == "branched12" else "H_x",
        subgroup_nodes={
            frozenset({"s", "t", "st"}): "H_x",
            frozenset({"s", "it", "ist"}): "H_z",
            frozenset({"t", "is", "ist"}): "H_y",
            frozenset({"st", "is", "it"}): "E",
        },
    )


def _build_b2_double(config: MarkedConfig) -> Tower:
    ws = config.w_points()
    n = len(ws)
    if n < 3 or n % 2 == 0:
        raise InvalidConfig("b2 tower needs 2g+1 Weierstrass slots plus y and z, g >= 1")
    g = (n - 1) // 2
    roles = dict(config.triple_points())
    if set(roles) != {"y", "z"}:
        raise InvalidConfig("b2 tower needs exactly the roles y and z")
    py, pz = roles["y"], roles["z"]

    w_labels = tuple(f"w{i}" for i in range(1, n + 1))
    positions = dict(zip(w_labels, ws))

    p1 = CurveNode("P1", 0, None, display="P1")
    H = CurveNode("H", g, WUniverse(("z",) + w_labels),
                  branch_image={**positions, "z": pz}, marks={"z": "z"})
    Hp = CurveNode("Hprime", g, WUniverse(("y",) + w_labels),
                   branch_image={**positions, "y": py}, marks={"y": "y"},
                   display="H'")
    C = CurveNode("C", 2 * g, WUniverse(tuple((i, k) for i in range(1, n + 1) for k in ("0", "1"))))

    proj = {(i, k): f"w{i}" for i in range(1, n + 1) for k in ("0", "1")}
    edges = [
        CoverEdge(H, p1, 2, "hyperelliptic_to_P1", branch=tuple(H.branch_image.values())),
        CoverEdge(Hp, p1, 2, "hyperelliptic_to_P1", branch=tuple(Hp.branch_image.values())),
        CoverEdge(C, H, 2, "b2", proj=dict(proj),
                  branch=_pair_over(py), defining=("O(w)", "z")),
        CoverEdge(C, Hp, 2, "b2", proj=dict(proj),
                  branch=_pair_over(pz), defining=("O(w)", "y")),
    ]
    nodes = {nd.name: nd for nd in (p1, H, Hp, C)}
    return Tower(
        case="b2_double", g=g, config=config, nodes=nodes, edges=edges,
        deck_action={}, fixed_counts={}, top="C", base="H", subgroup_nodes={},
    )


def _build_b4_double(config: MarkedConfig, case: str) -> Tower:
    ws = config.w_points()
    n = len(ws)
    if n < 4 or n % 2 != 0:
        raise InvalidConfig("double-cover tower needs 2g Weierstrass slots plus x and y, g >= 2")
    g = n // 2
    if g < 2:
        raise InvalidConfig("double-cover tower needs g >= 2")
    roles = dict(config.triple_points())
    if set(roles) != {"x", "y"}:
        raise InvalidConfig("double-cover tower needs exactly the roles x and y")
    px, py = roles["x"], roles["y"]

    w_labels = tuple(f"w{i}" for i in range(1, n + 1))
    positions = dict(zip(w_labels, ws))

    p1 = CurveNode("P1", 0, None, display="P1")
    Y = CurveNode("Y", g, WUniverse(w_labels + ("x", "y")),
                  branch_image={**positions, "x": px, "y": py},
                  marks={"x": "x", "y": "y"})
    Yp = CurveNode("Yprime", g - 1, WUniverse(w_labels),
                   branch_image=dict(positions), display="Y'")
    X = CurveNode("X", 2 * g - 1,
                  WUniverse(tuple((i, k) for i in range(1, n + 1) for k in ("0", "1"))))

    proj = {(i, k): f"w{i}" for i in range(1, n + 1) for k in ("0", "1")}
    proj_to_y = dict(proj)
    edges = [
        CoverEdge(Y, p1, 2, "hyperelliptic_to_P1", branch=tuple(Y.branch_image.values())),
        CoverEdge(Yp, p1, 2, "hyperelliptic_to_P1", branch=tuple(Yp.branch_image.values())),
        CoverEdge(X, Y, 2, "etale", proj=proj_to_y,
                  defining=class_from_subset(Y.universe, ("x", "y"))),
        CoverEdge(X, Yp, 2, "b4", proj=dict(proj),
                  branch=_pair_over(px) + _pair_over(py), defining=("O(h)",)),
    ]
    nodes = {nd.name: nd for nd in (p1, Y, Yp, X)}
    return Tower(
        case=case, g=g, config=config, nodes=nodes, edges=edges,
        deck_action={}, fixed_counts={}, top="X",
        base="Y" if case == "etale_double" else "Yprime", subgroup_nodes={},
    )


_BUILDERS = {
    "b2_double": lambda cfg: _build_b2_double(cfg),
    "etale_double": lambda cfg: _build_b4_double(cfg, "etale_double"),
    "b4_double": lambda cfg: _build_b4_double(cfg, "b4_double"),
    "etale_klein": lambda cfg: _build_etale_klein(cfg, "etale_klein"),
    "mixed8": lambda cfg: _build_etale_klein(cfg, "mixed8"),
    "branched12": lambda cfg: _build_branched12(cfg, "branched12"),
    "mixed4": lambda cfg: _build_branched12(cfg, "mixed4"),
}

CASES = tuple(_BUILDERS)


def build_tower(config: MarkedConfig, case: str) -> Tower:
    """Construct and validate the full covering tower of the given case."""
    if case not in _BUILDERS:
        raise InvalidConfig(f"unknown case {case!r}")
    tower = _BUILDERS[case](config)
    report = validate_tower(tower)
    if not report["ok"]:
        raise InvalidConfig(f"tower failed validation: {report['failures']}")
    return tower


# --- validation ---------------------------------------------------------------


def _edge_checks(edge: CoverEdge) -> list:
    checks = []
    if edge.kind == "hyperelliptic_to_P1":
        expect = 2 * edge.source.genus + 2
        checks.append(("hyp branch count", len(edge.branch) == expect))
        checks.append(("hyp branch distinct", len(set(edge.branch)) == len(edge.branch)))
        checks.append(("hyp positions recorded",
                       set(edge.branch) == set(edge.source.branch_image.values())))
        return checks
    expected = rh_genus(edge.target.genus, edge.degree, edge.ram_count())
    checks.append(("riemann-hurwitz", edge.source.genus == expected))
    if edge.proj is not None:
        total = set(edge.proj) == set(edge.source.universe.labels)
        into = set(edge.proj.values()) <= set(edge.target.universe.labels)
        checks.append(("projection total", total and into))
        fiber_sizes = {len(f) for f in edge.fibers.values() if f}
        checks.append(("fiber sizes", fiber_sizes <= {edge.degree}))
    if edge.kind == "etale" and edge.degree == 2:
        checks.append(("etale criterion", check_etale_hyperelliptic(edge.defining)))
        checks.append(("defining labels dropped",
                       not edge.proj or all(
                           lab in edge.dropped
                           for lab in _min_weight_rep(edge.defining))))
    if edge.kind == "etale" and edge.degree == 4:
        grp = edge.defining
        ok = isinstance(grp, TwoTorsionSubgroup) and grp.order() == 4
        if ok:
            elems = [c for c in grp.elements() if not c.is_zero]
            ok = all(c.min_weight() == 2 for c in elems) and any(
                weil_pairing(a, b) == -1
                for a, b in itertools.combinations(elems, 2))
        checks.append(("klein group criterion", ok))
    if edge.kind == "b2":
        checks.append(("b2 criterion",
                       check_b2_hyperelliptic(edge.target, edge.branch, edge.defining)))
    if edge.kind == "b4":
        checks.append(("b4 criterion",
                       check_b4_hyperelliptic(edge.target, edge.branch, edge.defining)))
    return checks


def _min_weight_rep(cls: TwoTorsionClass) -> tuple:
    bits = cls.bits
    n = cls.universe.size
    if bin(bits).count("1") * 2 > n:
        bits ^= cls.universe.full_mask
    return cls.universe.labels_of(bits)


def _composite_projections(tower: Tower) -> dict:
    """All label projections between node pairs, one per directed path."""
    outgoing = {}
    for e in tower.edges:
        if e.proj is not None:
            outgoing.setdefault(e.source.name, []).append(e)
    results: dict = {}

    def walk(start: str, current: str, mapping: dict, visited: frozenset):
        for e in outgoing.get(current, ()):
            nxt = e.target.name
            if nxt in visited:
                continue
            composed = {lab: e.proj[val] for lab, val in mapping.items()}
            results.setdefault((start, nxt), []).append(composed)
            walk(start, nxt, composed, visited | {nxt})

    for name, node in tower.nodes.items():
        if node.universe is None:
            continue
        identity = {lab: lab for lab in node.universe.labels}
        walk(name, name, identity, frozenset({name}))
    return results


def validate_tower(tower: Tower) -> dict:
    """Re-derive every structural fact of the tower; report failures."""
    failures = []

    def check(name: str, ok: bool):
        if not ok:
            failures.append(name)

    for e in tower.edges:
        for name, ok in _edge_checks(e):
            check(f"{e.source.name}->{e.target.name}: {name}", ok)

    # label-level commutativity of the diagram
    for (a, b), mappings in _composite_projections(tower).items():
        first = mappings[0]
        for other in mappings[1:]:
            check(f"commutativity {a}->{b}", other == first)

    # deck action: freeness and compatibility with every top edge
    if tower.deck_action:
        topu = tower.top_universe()
        for name, perm in tower.deck_action.items():
            check(f"deck {name} is a permutation",
                  set(perm) == set(topu.labels) and set(perm.values()) == set(topu.labels))
            check(f"deck {name} acts freely",
                  all(perm[lab] != lab for lab in topu.labels))
            check(f"deck {name} is an involution",
                  all(perm[perm[lab]] == lab for lab in topu.labels))
        for e in tower.edges:
            if e.source.name != tower.top or not e.deck:
                continue
            for lab in topu.labels:
                orbit = label_orbit(lab, e.deck)
                fib = e.fibers.get(e.proj[lab], ())
                if frozenset(fib) != orbit:
                    check(f"fibers of {e.target.name} match deck orbits", False)
                    break

        # Accola identity on each Klein subgroup with a materialized quotient
        for sub, node_name in tower.subgroup_nodes.items():
            quotients = []
            ok = True
            for inv in sorted(sub):
                q = _involution_genus(tower.nodes[tower.top].genus, tower.fixed_counts[inv])
                if q is None:
                    ok = False
                    break
                quotients.append(q)
            check(f"involution genera integral for {node_name}", ok)
            if ok:
                check(f"accola identity at {node_name}",
                      accola_check(tower.nodes[tower.top].genus,
                                   tower.nodes[node_name].genus, *quotients))

        # fixed loci of the involutions with fixed points avoid Weierstrass labels
        with_fps = [inv for inv, cnt in tower.fixed_counts.items() if cnt == 4]
        check("three involutions with 4 fixed points each",
              len(with_fps) == 3 and all(tower.fixed_counts[i] == 0
                                         for i in set(tower.fixed_counts) - set(with_fps)))

    return {"ok": not failures, "failures": failures}


# --- serialization -------------------------------------------------------------


def _defining_to_json(d: Defining):
    if d is None:
        return None
    if isinstance(d, TwoTorsionClass):
        return {"kind": "class", "labels": d.to_json()}
    if isinstance(d, TwoTorsionSubgroup):
        return {"kind": "subgroup",
                "generators": [c.to_json() for c in d.classes()]}
    if d[0] == "O(w)":
        return {"kind": "O(w)", "label": format_label(d[1])}
    return {"kind": "O(h)"}


def _defining_from_json(data, source: CurveNode, target: CurveNode) -> Defining:
    if data is None:
        return None
    if data["kind"] == "class":
        return class_from_subset(target.universe, [parse_label(s) for s in data["labels"]])
    if data["kind"] == "subgroup":
        gens = [class_from_subset(target.universe, [parse_label(s) for s in lab])
                for lab in data["generators"]]
        return span(target.universe, gens)
    if data["kind"] == "O(w)":
        return ("O(w)", parse_label(data["label"]))
    return ("O(h)",)


def _branch_to_json(branch: tuple):
    out = []
    for item in branch:
        if isinstance(item, ProjPoint):
            out.append({"kind": "p1", "at": format_point(item)})
        elif item[0] == "w":
            out.append({"kind": "w", "label": format_label(item[1])})
        else:
            out.append({"kind": "over", "at": format_point(item[1]), "sheet": item[2]})
    return out


def _branch_from_json(data) -> tuple:
    out = []
    for item in data:
        if item["kind"] == "p1":
            out.append(parse_point(item["at"]))
        elif item["kind"] == "w":
            out.append(("w", parse_label(item["label"])))
        else:
            out.append(("over", parse_point(item["at"]), item["sheet"]))
    return tuple(out)


def tower_to_json(tower: Tower) -> dict:
    nodes = []
    for nd in tower.nodes.values():
        nodes.append({
            "name": nd.name,
            "display": nd.display,
            "genus": nd.genus,
            "labels": None if nd.universe is None else nd.universe.to_json(),
            "branch_image": {format_label(k): format_point(v)
                             for k, v in nd.branch_image.items()},
            "marks": {format_label(k): v for k, v in nd.marks.items()},
        })
    edges = []
    for e in tower.edges:
        edges.append({
            "source": e.source.name,
            "target": e.target.name,
            "degree": e.degree,
            "kind": e.kind,
            "proj": None if e.proj is None else
                    {format_label(k): format_label(v) for k, v in e.proj.items()},
            "branch": _branch_to_json(e.branch),
            "defining": _defining_to_json(e.defining),
            "deck": list(e.deck),
        })
    return {
        "case": tower.case,
        "g": tower.g,
        "config": tower.config.to_json(),
        "nodes": nodes,
        "edges": edges,
        "deck_action": {
            elem: {format_label(k): format_label(v) for k, v in perm.items()}
            for elem, perm in tower.deck_action.items()
        },
        "fixed_counts": dict(tower.fixed_counts),
        "top": tower.top,
        "base": tower.base,
        "subgroup_nodes": [
            {"involutions": sorted(sub), "node": name}
            for sub, name in tower.subgroup_nodes.items()
        ],
    }


def tower_from_json(data: dict) -> Tower:
    nodes = {}
    for nd in data["nodes"]:
        labels = nd["labels"]
        universe = None if labels is None else WUniverse(tuple(parse_label(s) for s in labels))
        nodes[nd["name"]] = CurveNode(
            nd["name"], nd["genus"], universe, display=nd.get("display", nd["name"]),
            branch_image={parse_label(k): parse_point(v)
                          for k, v in nd["branch_image"].items()},
            marks={parse_label(k): v for k, v in nd.get("marks", {}).items()},
        )
    edges = []
    for ed in data["edges"]:
        source, target = nodes[ed["source"]], nodes[ed["target"]]
        proj = ed["proj"]
        edges.append(CoverEdge(
            source, target, ed["degree"], ed["kind"],
            proj=None if proj is None else
                 {parse_label(k): parse_label(v) for k, v in proj.items()},
            branch=_branch_from_json(ed["branch"]),
            defining=_defining_from_json(ed["defining"], source, target),
            deck=tuple(ed.get("deck", ())),
        ))
    return Tower(
        case=data["case"], g=data["g"],
        config=MarkedConfig.from_json(data["config"]),
        nodes=nodes, edges=edges,
        deck_action={
            elem: {parse_label(k): parse_label(v) for k, v in perm.items()}
            for elem, perm in data.get("deck_action", {}).items()
        },
        fixed_counts=dict(data.get("fixed_counts", {})),
        top=data["top"], base=data["base"],
        subgroup_nodes={
            frozenset(item["involutions"]): item["node"]
            for item in data.get("subgroup_nodes", [])
        },
    )


def tower_to_dot(tower: Tower) -> str:
    """Render the tower as a DOT digraph with genus annotations."""
    lines = [f'digraph "{tower.case}" {{', "  rankdir=TB;"]
    for nd in tower.nodes.values():
        genus = f" (g={nd.genus})" if nd.universe is not None else ""
        lines.append(f'  "{nd.name}" [label="{nd.display}{genus}"];')
    for e in tower.edges:
        style = {"etale": "solid", "b2": "dashed", "b4": "dashed",
                 "hyperelliptic_to_P1": "dotted"}[e.kind]
        lines.append(
            f'  "{e.source.name}" -> "{e.target.name}" '
            f'[label="{e.degree}:1 {e.kind}", style={style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
