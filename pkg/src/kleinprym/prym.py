"""Forward Prym computation on covering towers.

The quotient Jacobians of a branched Klein tower embed their 2-torsion into
the top Jacobian; this module realizes those embeddings as explicit subgroup
spans over the top Weierstrass universe, computes the gluing groups and
addition-map kernels used by the inverse algorithms, the polarisation type
vectors, and the symbolic Prym datum (constituent curves plus gluing table)
that the reconstruction consumes.

Generator conventions on the top universe {(i, gamma)}: writing e_i for the
full four-element orbit over slot i and splitting each orbit into the two
blocks paired by the relevant involution,

* JE[2]            differences e_i - e_j,
* JH*[2]           all e_i together with one full block-choice sum Q,
* JT[2]            all differences of two-element blocks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import idempotents
from .errors import InvalidConfig, UnsupportedNode
from .projline import Mobius, ProjPoint, format_point, parse_point
from .torsion import (
    TwoTorsionClass,
    TwoTorsionSubgroup,
    WUniverse,
    class_from_subset,
    format_label,
    intersect,
    parse_label,
    span,
    subgroup_sum,
)
from .towers import GAMMA, Tower, gamma_mul

# Orbit blocks paired by each fixed-point involution, written as the two
# complementary subsets of {1, s, t, st}.
_BLOCKS = {
    "st": (("1", "st"), ("s", "t")),
    "is": (("1", "s"), ("t", "st")),
    "it": (("1", "t"), ("s", "st")),
}

_NODE_INVOLUTION = {"T_x": "st", "T_y": "is", "T_z": "it",
                    "H_x": "st", "H_y": "is", "H_z": "it"}


def _orbit(universe: WUniverse, i: int, parts: Sequence[str]) -> list:
    return [(i, g) for g in parts]


def _e_class(universe: WUniverse, i: int) -> TwoTorsionClass:
    return class_from_subset(universe, _orbit(universe, i, GAMMA))


def _block_class(universe: WUniverse, i: int, block: Sequence[str]) -> TwoTorsionClass:
    return class_from_subset(universe, _orbit(universe, i, block))


def _slot_count(universe: WUniverse) -> int:
    return universe.size // 4


def _sum(a: TwoTorsionClass, b: TwoTorsionClass) -> TwoTorsionClass:
    from .torsion import add
    return add(a, b)


def _je_generators(universe: WUniverse) -> list:
    n = _slot_count(universe)
    e1 = _e_class(universe, 1)
    return [_sum(e1, _e_class(universe, i)) for i in range(2, n + 1)]


def _q_class(universe: WUniverse, involution: str, choice: Optional[Sequence[int]] = None
             ) -> TwoTorsionClass:
    """A block-choice sum: one of the two involution blocks per slot."""
    n = _slot_count(universe)
    first, second = _BLOCKS[involution]
    picks = choice if choice is not None else [0] * n
    labels = []
    for i in range(1, n + 1):
        labels.extend(_orbit(universe, i, first if picks[i - 1] == 0 else second))
    return class_from_subset(universe, labels)


def embed_2torsion(tower: Tower, node: str) -> TwoTorsionSubgroup:
    """The 2-torsion of a quotient Jacobian embedded in the top universe.

    Branched towers carry full tables for E, the three H quotients and the
    three T quotients. On etale Klein towers only the base H is specified:
    its image is the span of the shared orbit classes (the gluing group);
    the side quotients H_x, H_y, H_z have no published tables and are
    rejected rather than guessed.
    """
    universe = tower.top_universe()
    n = _slot_count(universe)
    if tower.case in ("branched12", "mixed4"):
        if node == "E":
            return span(universe, _je_generators(universe))
        if node in ("H_x", "H_y", "H_z"):
            inv = _NODE_INVOLUTION[node]
            gens = [_e_class(universe, i) for i in range(1, n + 1)]
            gens.append(_q_class(universe, inv))
            return span(universe, gens)
        if node in ("T_x", "T_y", "T_z"):
            inv = _NODE_INVOLUTION[node]
            first, second = _BLOCKS[inv]
            base = _block_class(universe, 1, first)
            gens = []
            for i in range(1, n + 1):
                gens.append(_sum(base, _block_class(universe, i, first)))
                gens.append(_sum(base, _block_class(universe, i, second)))
            return span(universe, gens)
        raise UnsupportedNode(f"no 2-torsion table for node {node!r} in case {tower.case}")
    if tower.case in ("etale_klein", "mixed8"):
        if node == "H":
            gens = [_e_class(universe, i) for i in range(1, n + 1)]
            return span(universe, gens)
        raise UnsupportedNode(
            f"no published table embeds {node!r} for case {tower.case}; "
            "only the base H image (the shared-orbit span) is specified"
        )
    raise UnsupportedNode(f"case {tower.case!r} carries no embedding tables")


def triple_intersection(tower: Tower) -> TwoTorsionSubgroup:
    """Intersection of the three branched quotient images JH*[2]."""
    if tower.case not in ("branched12", "mixed4"):
        raise InvalidConfig("triple intersection needs a branched tower")
    hx = embed_2torsion(tower, "H_x")
    hy = embed_2torsion(tower, "H_y")
    hz = embed_2torsion(tower, "H_z")
    return intersect(intersect(hx, hy), hz)


def gluing_group(tower: Tower) -> TwoTorsionSubgroup:
    """The common-image subgroup along which constituents are glued."""
    universe = tower.top_universe()
    n = _slot_count(universe)
    if tower.case in ("etale_klein", "mixed8"):
        return span(universe, [_e_class(universe, i) for i in range(1, n + 1)])
    if tower.case == "branched12":
        return triple_intersection(tower)
    if tower.case == "mixed4":
        hy = embed_2torsion(tower, "H_y")
        hz = embed_2torsion(tower, "H_z")
        return intersect(hy, hz)
    raise InvalidConfig(f"no gluing group for case {tower.case!r}")


def addition_kernel(tower: Tower) -> dict:
    """Kernel data of the addition map onto the Prym variety.

    The kernel consists of triples (a, b, -a-b) of 2-torsion points, so its
    order is the product of the 2-torsion orders of two free factors.
    """
    g = tower.g
    if tower.case == "etale_klein":
        factor = 2 ** (2 * (g - 1))
        return {
            "case": tower.case,
            "shape": "{(a, b, -a-b) : a in JH_x[2], b in JH_y[2]}",
            "psi_degree": factor * factor,
            "factors": {"JH_x[2]": factor, "JH_y[2]": factor},
        }
    if tower.case == "mixed8":
        factor = 2 ** (2 * (g - 1))
        return {
            "case": tower.case,
            "shape": "{(-(b+c), b, c) : b in JH_y[2], c in JH_z[2]}",
            "psi_degree": factor * factor,
            "pi_P_degree": 4 ** (g - 1),
            "factors": {"JH_y[2]": factor, "JH_z[2]": factor},
        }
    raise InvalidConfig("addition kernel data applies to the etale Klein and mixed8 cases")


_DELTA_RANGES = {"etale_klein": 2, "mixed8": 2, "branched12": 1, "mixed4": 1}


def polarisation_type(case: str, g: int) -> tuple:
    """The polarisation type vector of the Prym variety.

    Lengths equal the Prym dimension: 3g-3, 3g-2, 3g+3 and 3g+2 for the
    etale Klein, mixed8, branched12 and mixed4 cases respectively.
    """
    if case not in _DELTA_RANGES:
        raise InvalidConfig(f"no polarisation type for case {case!r}")
    if g < _DELTA_RANGES[case]:
        raise InvalidConfig(f"case {case} needs g >= {_DELTA_RANGES[case]}")
    if case == "etale_klein":
        return (1,) * (2 * g - 2) + (4,) * (g - 1)
    if case == "mixed8":
        return (1,) * (2 * g - 1) + (4,) * (g - 1)
    if case == "branched12":
        return (1,) * (2 * g + 3) + (4,) * g
    return (1,) * (2 * g + 1) + (2,) + (4,) * g


def prym_dimension(case: str, g: int) -> int:
    return len(polarisation_type(case, g))


# --- the symbolic Prym datum ----------------------------------------------------


@dataclass(frozen=True)
class Constituent:
    """A marked constituent curve: branch positions keyed by its own labels."""

    name: str
    genus: int
    labels: tuple
    positions: dict  # label -> ProjPoint

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "genus": self.genus,
            "labels": [format_label(l) for l in self.labels],
            "positions": {format_label(l): format_point(p)
                          for l, p in self.positions.items()},
        }

    @staticmethod
    def from_json(data: dict) -> "Constituent":
        labels = tuple(parse_label(s) for s in data["labels"])
        return Constituent(
            data["name"], data["genus"], labels,
            {parse_label(k): parse_point(v) for k, v in data["positions"].items()},
        )


@dataclass(frozen=True)
class PrymDatum:
    """What the inverse consumes: constituents up to independent Moebius
    transformation and label permutation, plus the gluing table."""

    case: str
    g: int
    pol_type: tuple
    constituents: tuple  # of Constituent
    gluing: tuple        # classes: tuples of (constituent index, label)
    extra_pairs: tuple = ()   # pairwise identifications of leftover labels
    v4: tuple = ()            # two generator label-subsets on the first constituent

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "g": self.g,
            "pol_type": list(self.pol_type),
            "constituents": [c.to_json() for c in self.constituents],
            "gluing": [[[ci, format_label(lab)] for ci, lab in cls] for cls in self.gluing],
            "extra_pairs": [[[ci, format_label(lab)] for ci, lab in pair]
                            for pair in self.extra_pairs],
            "v4": [[format_label(lab) for lab in gen] for gen in self.v4],
        }

    @staticmethod
    def from_json(data: dict) -> "PrymDatum":
        return PrymDatum(
            case=data["case"],
            g=data["g"],
            pol_type=tuple(data["pol_type"]),
            constituents=tuple(Constituent.from_json(c) for c in data["constituents"]),
            gluing=tuple(tuple((ci, parse_label(lab)) for ci, lab in cls)
                         for cls in data["gluing"]),
            extra_pairs=tuple(tuple((ci, parse_label(lab)) for ci, lab in pair)
                              for pair in data.get("extra_pairs", ())),
            v4=tuple(tuple(parse_label(lab) for lab in gen)
                     for gen in data.get("v4", ())),
        )


_CONSTITUENTS = {
    "etale_klein": ("H_x", "H_y", "H_z"),
    "mixed8": ("H", "H_y", "H_z"),
    "branched12": ("H_x", "H_y", "H_z"),
    "mixed4": ("E", "H_y", "H_z"),
}

# Leftover labels of each constituent that are glued pairwise (the shared
# image becomes a triple point on reconstruction).
_EXTRA_PAIRS = {
    "branched12": ((("H_x", "uz"), ("H_y", "uz")),
                   (("H_x", "uy"), ("H_z", "uy")),
                   (("H_y", "ux"), ("H_z", "ux"))),
    "mixed4": ((("H_y", "ux"), ("H_z", "ux")),),
}


def random_mobius(rng: random.Random, bound: int = 9) -> Mobius:
    while True:
        entries = [rng.randint(-bound, bound) for _ in range(4)]
        if entries[0] * entries[3] - entries[1] * entries[2] != 0:
            return Mobius.of(*entries)


def _scramble_constituent(c: Constituent, rng: random.Random
                          ) -> tuple["Constituent", dict]:
    """Independent Moebius move plus opaque label renaming."""
    m = random_mobius(rng)
    perm = list(range(len(c.labels)))
    rng.shuffle(perm)
    new_labels = tuple(f"p{k + 1}" for k in range(len(c.labels)))
    mapping = {}
    positions = {}
    for new_idx, old_idx in enumerate(perm):
        old = c.labels[old_idx]
        mapping[old] = new_labels[new_idx]
        positions[new_labels[new_idx]] = m.apply(c.positions[old])
    return Constituent(c.name, c.genus, new_labels, positions), mapping


def _shared_w_count(case: str, g: int) -> int:
    return 2 * g - 1 if case in ("etale_klein", "mixed8") else 2 * g + 2


def prym_datum(tower: Tower, scramble: Optional[int] = None) -> PrymDatum:
    """Emit the symbolic Prym datum of a built tower.

    With ``scramble`` set, every constituent is independently transformed by
    a pseudorandom Moebius map and label permutation derived from the seed;
    the gluing table is rewritten through the renaming, so the datum carries
    exactly the intrinsic information.
    """
    case = tower.case
    if case not in _CONSTITUENTS:
        raise InvalidConfig(f"no Prym datum for case {case!r}")
    g = tower.g
    names = _CONSTITUENTS[case]
    constituents = []
    for name in names:
        node = tower.node(name)
        constituents.append(Constituent(
            name, node.genus, node.universe.labels, dict(node.branch_image),
        ))

    shared = _shared_w_count(case, g)
    gluing = tuple(
        tuple((ci, f"w{n}") for ci in range(3)) for n in range(1, shared + 1)
    )
    name_to_idx = {name: i for i, name in enumerate(names)}
    extra_pairs = tuple(
        tuple((name_to_idx[nm], lab) for nm, lab in pair)
        for pair in _EXTRA_PAIRS.get(case, ())
    )
    v4 = ()
    if case == "mixed8":
        v4 = (("x", "y"), ("y", "z"))

    if scramble is not None:
        scrambled = []
        mappings = []
        for idx, c in enumerate(constituents):
            rng = random.Random(f"{scramble}:{case}:{idx}")
            sc, mapping = _scramble_constituent(c, rng)
            scrambled.append(sc)
            mappings.append(mapping)
        constituents = scrambled
        gluing = tuple(
            tuple((ci, mappings[ci][lab]) for ci, lab in cls) for cls in gluing
        )
        extra_pairs = tuple(
            tuple((ci, mappings[ci][lab]) for ci, lab in pair) for pair in extra_pairs
        )
        if v4:
            v4 = tuple(tuple(mappings[0][lab] for lab in gen) for gen in v4)

    return PrymDatum(
        case=case, g=g, pol_type=polarisation_type(case, g),
        constituents=tuple(constituents), gluing=gluing,
        extra_pairs=extra_pairs, v4=v4,
    )


# --- decomposition report --------------------------------------------------------


def expected_orders(case: str, g: int) -> dict:
    if case in ("branched12", "mixed4"):
        return {
            "JE[2]": 2 ** (2 * g),
            "JH*[2]": 2 ** (2 * g + 2),
            "JT[2]": 2 ** (4 * g + 2),
            "triple_intersection": 2 ** (2 * g + 1),
        }
    return {
        "G_P": 2 ** (2 * g - 2),
        "addition_kernel": 4 ** (2 * g - 2),
    }


def decomposition_check(tower: Tower, with_oracle: bool = False) -> dict:
    """Certify the idempotent ledger and the 2-torsion subgroup lattice.

    For branched towers the report compares the orders of all seven embedded
    subgroups and their triple intersection against the closed-form counts;
    with ``with_oracle`` the rank additivity of sums and intersections is
    re-derived by brute-force element enumeration (small g only).
    """
    ring_case = "branched_klein" if tower.case in ("branched12", "mixed4") else "etale_klein"
    report = {
        "case": tower.case,
        "g": tower.g,
        "idempotents": idempotents.verify_decomposition(case=ring_case),
        "orders": {},
        "ok": True,
    }
    g = tower.g
    if tower.case in ("branched12", "mixed4"):
        groups = {}
        expect = {
            "E": 2 ** (2 * g),
            "H_x": 2 ** (2 * g + 2), "H_y": 2 ** (2 * g + 2), "H_z": 2 ** (2 * g + 2),
            "T_x": 2 ** (4 * g + 2), "T_y": 2 ** (4 * g + 2), "T_z": 2 ** (4 * g + 2),
        }
        for node, want in expect.items():
            grp = embed_2torsion(tower, node)
            groups[node] = grp
            report["orders"][node] = {"computed": grp.order(), "expected": want,
                                      "ok": grp.order() == want}
        inter = triple_intersection(tower)
        want = 2 ** (2 * g + 1)
        report["orders"]["triple_intersection"] = {
            "computed": inter.order(), "expected": want, "ok": inter.order() == want,
        }
        if with_oracle:
            rank_law = []
            pairs = [("H_x", "H_y"), ("H_x", "H_z"), ("H_y", "H_z"), ("E", "H_x")]
            for a, b in pairs:
                ga, gb = groups[a], groups[b]
                inter_ab = intersect(ga, gb)
                sum_ab = subgroup_sum(ga, gb)
                additivity = ga.rank + gb.rank == sum_ab.rank + inter_ab.rank
                brute = None
                if ga.rank <= 12 and gb.rank <= 12:
                    ea = {c.bits for c in ga.elements()}
                    eb = {c.bits for c in gb.elements()}
                    brute = len(ea & eb) == inter_ab.order()
                rank_law.append({"pair": [a, b], "additivity": additivity,
                                 "brute_force_intersection": brute})
            report["rank_law"] = rank_law
            report["ok"] &= all(
                item["additivity"] and item["brute_force_intersection"] in (True, None)
                for item in rank_law
            )
    else:
        gp = gluing_group(tower)
        want = 2 ** (2 * g - 2)
        report["orders"]["G_P"] = {"computed": gp.order(), "expected": want,
                                   "ok": gp.order() == want}
        report["kernel"] = addition_kernel(tower)
    report["ok"] &= report["idempotents"]["all_hold"]
    report["ok"] &= all(item["ok"] for item in report["orders"].values())
    return report
