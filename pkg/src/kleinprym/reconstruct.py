"""Inverse reconstruction: from a Prym datum back to the marked configuration.

The alignment step anchors each constituent's Moebius map on the three lowest
gluing classes (mapping their labels onto the first constituent's anchor
positions) and then verifies every remaining gluing constraint exactly.
Leftover Weierstrass labels become the distinguished triple; the mixed cases
additionally resolve the distinguished point, either through the kernel group
V4 carried by the datum or through the pairwise gluing of leftover labels.
Failures always report the violated constraint, never a guessed configuration.

Also here: the non-injectivity witness for double covers branched in two
points, and the fiber enumeration for double covers branched in four points.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DegenerateConfiguration,
    InvalidDatum,
    NotInPrymImage,
)
from .projline import (
    INF,
    EquivalenceWitness,
    MarkedConfig,
    Mobius,
    ProjPoint,
    equivalent,
    format_point,
    mobius_from_triples,
)
from .prym import Constituent, PrymDatum, prym_datum, random_mobius
from .torsion import (
    TwoTorsionClass,
    TwoTorsionSubgroup,
    WUniverse,
    class_from_subset,
    format_label,
    span,
)
from .towers import Tower, build_tower


@dataclass
class ReconstructionResult:
    config: MarkedConfig
    alignment: list       # per-constituent {"mobius": Mobius, "anchors": [...]}
    certificate: dict

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "alignment": [
                {"constituent": a["constituent"],
                 "mobius": a["mobius"].to_json(),
                 "anchors": [format_label(l) for l in a["anchors"]]}
                for a in self.alignment
            ],
            "certificate": self.certificate,
        }


_SHAPES = {
    # case: genus offset of each constituent relative to g
    "etale_klein": (-1, -1, -1),
    "mixed8": (0, -1, -1),
    "branched12": (1, 1, 1),
    "mixed4": (0, 1, 1),
}


def _shared_count(case: str, g: int) -> int:
    return 2 * g - 1 if case in ("etale_klein", "mixed8") else 2 * g + 2


def _validate_shape(d: PrymDatum) -> None:
    if d.case not in _SHAPES:
        raise InvalidDatum(f"unknown case {d.case!r}")
    if len(d.constituents) != 3:
        raise InvalidDatum("a Prym datum carries exactly three constituents")
    for c, goff in zip(d.constituents, _SHAPES[d.case]):
        want_genus = d.g + goff
        want_labels = 2 * want_genus + 2
        if c.genus != want_genus:
            raise InvalidDatum(
                f"constituent {c.name}: genus {c.genus}, expected {want_genus}")
        if len(c.labels) != want_labels:
            raise InvalidDatum(
                f"constituent {c.name}: {len(c.labels)} labels, expected {want_labels}")
        if set(c.positions) != set(c.labels):
            raise InvalidDatum(f"constituent {c.name}: positions do not match labels")
        if len(set(c.positions.values())) != len(c.labels):
            raise InvalidDatum(f"constituent {c.name}: branch points not distinct")


def _validate_gluing(d: PrymDatum) -> None:
    used = [set() for _ in d.constituents]
    for cls in d.gluing:
        if len(cls) != 3:
            raise NotInPrymImage("gluing class of wrong size",
                                 f"class {cls!r} does not tie all three constituents")
        seen_ci = set()
        for ci, lab in cls:
            if not 0 <= ci < 3:
                raise InvalidDatum(f"gluing class references constituent {ci}")
            if lab not in d.constituents[ci].positions:
                raise InvalidDatum(f"gluing class references unknown label {lab!r}")
            if ci in seen_ci or lab in used[ci]:
                raise NotInPrymImage("gluing table reuses a label",
                                     f"({ci}, {lab!r})")
            seen_ci.add(ci)
            used[ci].add(lab)


def _align(d: PrymDatum) -> dict:
    """Anchor on the three lowest gluing classes, verify the rest exactly."""
    shared = _shared_count(d.case, d.g)
    if len(d.gluing) != shared:
        raise NotInPrymImage(
            "wrong number of gluing classes",
            f"got {len(d.gluing)}, the alignment needs {shared}",
        )
    if shared < 3:
        raise NotInPrymImage("alignment underdetermined",
                             "fewer than three gluing classes")

    anchor_classes = d.gluing[:3]
    c0_anchor_labels = [dict(cls)[0] for cls in anchor_classes]
    frame = [d.constituents[0].positions[lab] for lab in c0_anchor_labels]

    maps = []
    alignment = []
    for ci, c in enumerate(d.constituents):
        labels = [dict(cls)[ci] for cls in anchor_classes]
        src = [c.positions[lab] for lab in labels]
        try:
            m = mobius_from_triples(src, frame)
        except DegenerateConfiguration as exc:
            raise NotInPrymImage("degenerate anchor triple", str(exc))
        maps.append(m)
        alignment.append({"constituent": c.name, "mobius": m, "anchors": labels})

    aligned = [
        {lab: maps[ci].apply(pos) for lab, pos in c.positions.items()}
        for ci, c in enumerate(d.constituents)
    ]

    shared_positions = []
    for n, cls in enumerate(d.gluing):
        pts = {aligned[ci][lab] for ci, lab in cls}
        if len(pts) != 1:
            raise NotInPrymImage(
                "gluing class mismatch",
                f"class {n + 1} members land on {len(pts)} distinct points",
            )
        shared_positions.append(pts.pop())
    if len(set(shared_positions)) != len(shared_positions):
        raise NotInPrymImage("glued points collide",
                             "two gluing classes share one position")

    glued_labels = [set() for _ in d.constituents]
    for cls in d.gluing:
        for ci, lab in cls:
            glued_labels[ci].add(lab)
    leftovers = [
        {lab: aligned[ci][lab] for lab in d.constituents[ci].labels
         if lab not in glued_labels[ci]}
        for ci in range(3)
    ]
    return {
        "maps": maps,
        "alignment": alignment,
        "aligned": aligned,
        "shared_positions": shared_positions,
        "leftovers": leftovers,
    }


def _assemble(shared_positions: Sequence[ProjPoint], triple: dict) -> MarkedConfig:
    pairs = [(p, f"w{i + 1}") for i, p in enumerate(shared_positions)]
    pairs += [(p, role) for role, p in triple.items()]
    pts = [p for p, _ in pairs]
    if len(set(pts)) != len(pts):
        raise NotInPrymImage("reconstructed points collide",
                             "a leftover landed on a shared point")
    return MarkedConfig.make(pairs)


def invert_etale_klein(d: PrymDatum) -> ReconstructionResult:
    """Three genus g-1 constituents glued along 2g-1 classes; the three
    leftover Weierstrass images become the distinguished triple."""
    if d.case != "etale_klein":
        raise InvalidDatum(f"expected an etale_klein datum, got {d.case!r}")
    _validate_shape(d)
    _validate_gluing(d)
    state = _align(d)
    for ci, left in enumerate(state["leftovers"]):
        if len(left) != 1:
            raise NotInPrymImage(
                "wrong leftover count",
                f"constituent {d.constituents[ci].name} keeps {len(left)} unglued labels",
            )
    triple = {}
    for role, left in zip(("x", "y", "z"), state["leftovers"]):
        (lab, pos), = left.items()
        triple[role] = pos
    config = _assemble(state["shared_positions"], triple)
    return ReconstructionResult(config, state["alignment"], {
        "case": d.case,
        "verified_classes": len(d.gluing),
        "triple": {r: format_point(p) for r, p in triple.items()},
    })


def _leftover_pair_position(d: PrymDatum, state: dict, pair) -> ProjPoint:
    (ci, lab_i), (cj, lab_j) = pair
    pos_i = state["aligned"][ci].get(lab_i)
    pos_j = state["aligned"][cj].get(lab_j)
    if pos_i is None or pos_j is None:
        raise InvalidDatum(f"extra pair references unknown labels {pair!r}")
    if ci == cj:
        raise NotInPrymImage("extra pair ties one constituent to itself", repr(pair))
    if pos_i != pos_j:
        raise NotInPrymImage(
            "extra identification violated",
            f"{d.constituents[ci].name}:{lab_i} and "
            f"{d.constituents[cj].name}:{lab_j} land on different points",
        )
    return pos_i


def invert_branched12(d: PrymDatum) -> ReconstructionResult:
    """Three genus g+1 constituents glued along 2g+2 classes; each pair of
    constituents shares exactly one of the leftover labels, and the three
    shared images are the triple."""
    if d.case != "branched12":
        raise InvalidDatum(f"expected a branched12 datum, got {d.case!r}")
    _validate_shape(d)
    _validate_gluing(d)
    state = _align(d)
    for ci, left in enumerate(state["leftovers"]):
        if len(left) != 2:
            raise NotInPrymImage(
                "wrong leftover count",
                f"constituent {d.constituents[ci].name} keeps {len(left)} unglued labels",
            )
    if len(d.extra_pairs) != 3:
        raise NotInPrymImage("wrong number of extra identifications",
                             f"got {len(d.extra_pairs)}, need 3")
    pair_sets = [frozenset(ci for ci, _ in pair) for pair in d.extra_pairs]
    if set(pair_sets) != {frozenset({0, 1}), frozenset({0, 2}), frozenset({1, 2})}:
        raise NotInPrymImage(
            "extra identifications do not pair the constituents",
            "each pair of constituents must share exactly one leftover",
        )
    used = set()
    for pair in d.extra_pairs:
        for ci, lab in pair:
            if lab not in state["leftovers"][ci]:
                raise NotInPrymImage("extra pair uses a glued label",
                                     f"({ci}, {lab!r})")
            if (ci, lab) in used:
                raise NotInPrymImage("extra pair reuses a label", f"({ci}, {lab!r})")
            used.add((ci, lab))
    triple = {}
    roles = {frozenset({1, 2}): "x", frozenset({0, 2}): "y", frozenset({0, 1}): "z"}
    for pair in d.extra_pairs:
        pos = _leftover_pair_position(d, state, pair)
        triple[roles[frozenset(ci for ci, _ in pair)]] = pos
    config = _assemble(state["shared_positions"], triple)
    return ReconstructionResult(config, state["alignment"], {
        "case": d.case,
        "verified_classes": len(d.gluing),
        "triple": {r: format_point(p) for r, p in triple.items()},
    })


def _solve_v4(universe: WUniverse, v4: TwoTorsionSubgroup, y_label, z_label):
    """The unique label x with V4 = <{x,y}, {y,z}>, if it exists."""
    yz = class_from_subset(universe, (y_label, z_label))
    if v4.order() != 4:
        raise InvalidDatum("V4 must have order 4")
    if not v4.contains(yz):
        raise NotInPrymImage("V4 inconsistent", "the class y-z is not in V4")
    candidates = set()
    for cls in v4.elements():
        if cls.is_zero or cls.bits == yz.bits:
            continue
        if cls.min_weight() != 2:
            raise NotInPrymImage("V4 inconsistent",
                                 "an element is not a difference of two labels")
        labels = set(_small_rep(cls))
        if y_label in labels:
            labels.discard(y_label)
            candidates.add(labels.pop())
    if len(candidates) != 1:
        raise NotInPrymImage("V4 inconsistent", "no unique distinguished label")
    x_label = candidates.pop()
    # the remaining element must be {x, z}
    xz = class_from_subset(universe, (x_label, z_label))
    if not v4.contains(xz):
        raise NotInPrymImage("V4 inconsistent", "x-z is missing from V4")
    return x_label


def _small_rep(cls: TwoTorsionClass) -> tuple:
    bits = cls.bits
    if bin(bits).count("1") * 2 > cls.universe.size:
        bits ^= cls.universe.full_mask
    return cls.universe.labels_of(bits)


def invert_mixed8(d: PrymDatum) -> ReconstructionResult:
    """Constituents H (genus g) and H_y, H_z (genus g-1); y and z are read
    off positionally, then the kernel group V4 pins the distinguished x."""
    if d.case != "mixed8":
        raise InvalidDatum(f"expected a mixed8 datum, got {d.case!r}")
    _validate_shape(d)
    _validate_gluing(d)
    if len(d.v4) != 2:
        raise InvalidDatum("mixed8 datum must carry two generator classes for V4")
    state = _align(d)
    h = d.constituents[0]
    if len(state["leftovers"][0]) != 3:
        raise NotInPrymImage("wrong leftover count",
                             f"constituent {h.name} keeps {len(state['leftovers'][0])} unglued labels")
    for ci in (1, 2):
        if len(state["leftovers"][ci]) != 1:
            raise NotInPrymImage(
                "wrong leftover count",
                f"constituent {d.constituents[ci].name} keeps "
                f"{len(state['leftovers'][ci])} unglued labels",
            )

    h_left = state["leftovers"][0]
    matches = {}
    for ci, role in ((1, "y"), (2, "z")):
        (_, pos), = state["leftovers"][ci].items()
        hits = [lab for lab, p in h_left.items() if p == pos]
        if len(hits) != 1:
            raise NotInPrymImage(
                "leftover matching failed",
                f"the spare point of {d.constituents[ci].name} matches "
                f"{len(hits)} leftover points of {h.name}",
            )
        matches[role] = hits[0]
    remaining = set(h_left) - {matches["y"], matches["z"]}
    if len(remaining) != 1:
        raise NotInPrymImage("leftover matching failed",
                             "y and z do not pin a unique remaining label")
    x_candidate = remaining.pop()

    universe = WUniverse(h.labels)
    try:
        gens = [class_from_subset(universe, gen) for gen in d.v4]
    except Exception as exc:
        raise InvalidDatum(f"V4 generators malformed: {exc}")
    v4 = span(universe, gens)
    if v4.order() != 4:
        raise InvalidDatum("V4 must be a Klein group of order 4")
    x_label = _solve_v4(universe, v4, matches["y"], matches["z"])
    if x_label != x_candidate:
        raise NotInPrymImage(
            "V4 inconsistent",
            f"V4 selects {x_label!r} but alignment leaves {x_candidate!r}",
        )
    triple = {
        "dist": h_left[x_label],
        "y": h_left[matches["y"]],
        "z": h_left[matches["z"]],
    }
    config = _assemble(state["shared_positions"], triple)
    return ReconstructionResult(config, state["alignment"], {
        "case": d.case,
        "verified_classes": len(d.gluing),
        "v4_resolution": {"x": format_label(x_label),
                          "y": format_label(matches["y"]),
                          "z": format_label(matches["z"])},
        "triple": {r: format_point(p) for r, p in triple.items()},
    })


def invert_mixed4(d: PrymDatum) -> ReconstructionResult:
    """Constituents E (genus g) and H_y, H_z (genus g+1); the one glued pair
    of leftover labels is the distinguished point, the free leftovers are y
    and z."""
    if d.case != "mixed4":
        raise InvalidDatum(f"expected a mixed4 datum, got {d.case!r}")
    _validate_shape(d)
    _validate_gluing(d)
    state = _align(d)
    if state["leftovers"][0]:
        raise NotInPrymImage("wrong leftover count",
                             "the genus-g constituent must have all labels glued")
    for ci in (1, 2):
        if len(state["leftovers"][ci]) != 2:
            raise NotInPrymImage(
                "wrong leftover count",
                f"constituent {d.constituents[ci].name} keeps "
                f"{len(state['leftovers'][ci])} unglued labels",
            )
    if len(d.extra_pairs) != 1:
        raise NotInPrymImage("wrong number of extra identifications",
                             f"got {len(d.extra_pairs)}, need 1")
    pair = d.extra_pairs[0]
    if frozenset(ci for ci, _ in pair) != {1, 2}:
        raise NotInPrymImage("extra identification must tie the two larger constituents",
                             repr(pair))
    for ci, lab in pair:
        if lab not in state["leftovers"][ci]:
            raise NotInPrymImage("extra pair uses a glued label", f"({ci}, {lab!r})")
    x_pos = _leftover_pair_position(d, state, pair)
    paired = dict(pair)
    z_leftover = [p for lab, p in state["leftovers"][1].items() if lab != paired[1]]
    y_leftover = [p for lab, p in state["leftovers"][2].items() if lab != paired[2]]
    if len(z_leftover) != 1 or len(y_leftover) != 1:
        raise NotInPrymImage("leftover matching failed", "free leftovers not unique")
    triple = {"dist": x_pos, "y": y_leftover[0], "z": z_leftover[0]}
    config = _assemble(state["shared_positions"], triple)
    return ReconstructionResult(config, state["alignment"], {
        "case": d.case,
        "verified_classes": len(d.gluing),
        "triple": {r: format_point(p) for r, p in triple.items()},
    })


_INVERTERS = {
    "etale_klein": invert_etale_klein,
    "mixed8": invert_mixed8,
    "branched12": invert_branched12,
    "mixed4": invert_mixed4,
}


def invert(d: PrymDatum) -> ReconstructionResult:
    if d.case not in _INVERTERS:
        raise InvalidDatum(f"no inverse for case {d.case!r}")
    return _INVERTERS[d.case](d)


# --- round trips and sampling ------------------------------------------------


def random_point(rng: random.Random, taken: set) -> ProjPoint:
    while True:
        p = ProjPoint(Fraction(rng.randint(-60, 60), rng.randint(1, 8)))
        if p not in taken:
            taken.add(p)
            return p


_CASE_ROLES = {
    "b2_double": lambda g: [f"w{i}" for i in range(1, 2 * g + 2)] + ["z", "y"],
    "etale_double": lambda g: [f"w{i}" for i in range(1, 2 * g + 1)] + ["x", "y"],
    "b4_double": lambda g: [f"w{i}" for i in range(1, 2 * g + 1)] + ["x", "y"],
    "etale_klein": lambda g: [f"w{i}" for i in range(1, 2 * g)] + ["x", "y", "z"],
    "mixed8": lambda g: [f"w{i}" for i in range(1, 2 * g)] + ["dist", "y", "z"],
    "branched12": lambda g: [f"w{i}" for i in range(1, 2 * g + 3)] + ["x", "y", "z"],
    "mixed4": lambda g: [f"w{i}" for i in range(1, 2 * g + 3)] + ["dist", "y", "z"],
}


def random_config(case: str, g: int, rng: random.Random) -> MarkedConfig:
    roles = _CASE_ROLES[case](g)
    taken: set = set()
    return MarkedConfig.make([(random_point(rng, taken), role) for role in roles])


def roundtrip(config: MarkedConfig, case: str, seed: Optional[int] = None
              ) -> tuple[bool, Optional[EquivalenceWitness], ReconstructionResult]:
    """Forward, scramble, invert, compare; exact equality of marked configs."""
    tower = build_tower(config, case)
    datum = prym_datum(tower, scramble=seed)
    result = invert(datum)
    ok, witness = equivalent(config, result.config, unordered_triple=True)
    return ok, witness, result


# --- non-injectivity of double-cover Pryms ------------------------------------


def noninjectivity_witness_b2(g: int, seed: int) -> dict:
    """Two branched-in-2 towers over identical Prym data with inequivalent
    configurations: moving the Weierstrass point z does not change the Prym
    curve's branch set."""
    if g < 1:
        raise InvalidDatum("b2 witness needs g >= 1")
    rng = random.Random(f"b2-witness:{g}:{seed}")
    taken: set = set()
    ws = [random_point(rng, taken) for _ in range(2 * g + 1)]
    py = random_point(rng, taken)
    z1 = random_point(rng, taken)

    def make(z: ProjPoint) -> MarkedConfig:
        pairs = [(z, "z")] + [(w, f"w{i + 1}") for i, w in enumerate(ws)] + [(py, "y")]
        return MarkedConfig.make(pairs)

    cfg1 = make(z1)
    tower1 = build_tower(cfg1, "b2_double")
    for _ in range(64):
        z2 = random_point(rng, taken)
        cfg2 = make(z2)
        eq, _ = equivalent(cfg1, cfg2, unordered_triple=False)
        if not eq:
            break
    else:
        raise NotInPrymImage("could not sample an inequivalent partner")
    tower2 = build_tower(cfg2, "b2_double")

    prym_branch1 = sorted(format_point(p) for p in tower1.node("Hprime").branch_image.values())
    prym_branch2 = sorted(format_point(p) for p in tower2.node("Hprime").branch_image.values())
    return {
        "g": g,
        "seed": seed,
        "configs": [cfg1.to_json(), cfg2.to_json()],
        "towers": (tower1, tower2),
        "prym_branch_equal": prym_branch1 == prym_branch2,
        "configs_equivalent": False,
        "prym_branch": prym_branch1,
    }


def fiber_enumerate_b4(g: int) -> tuple[tuple[TwoTorsionClass, ...], int]:
    """The fiber of the Prym map on 4-branched double covers: choices of a
    Weierstrass pair on the genus-g curve, C(2g+2, 2) in total."""
    if g < 2:
        raise InvalidDatum("fiber enumeration needs g >= 2")
    universe = WUniverse(tuple(f"w{i}" for i in range(1, 2 * g + 3)))
    classes = tuple(
        class_from_subset(universe, pair)
        for pair in itertools.combinations(universe.labels, 2)
    )
    count = math.comb(2 * g + 2, 2)
    assert len(set(classes)) == count
    return classes, count


# --- label-free slow verification mode -----------------------------------------


def invert_unlabeled(d: PrymDatum, limit: int = 64) -> list[ReconstructionResult]:
    """Reconstruction ignoring the gluing table (search over matchings).

    Every Moebius map carrying three points of a constituent onto three
    points of the first constituent is tried; matchings with a full set of
    exact coincidences are handed to the labeled inverter. All successful
    reconstructions are returned up to configuration equivalence (the
    gluing table genuinely carries information: with few shared points,
    several inequivalent matchings can be consistent). Exponential in the
    constituent size, hence guarded to g <= 2.
    """
    if d.case not in _INVERTERS:
        raise InvalidDatum(f"no inverse for case {d.case!r}")
    if d.g > 2:
        raise InvalidDatum("the label-free search is limited to g <= 2")
    _validate_shape(d)
    shared = _shared_count(d.case, d.g)

    c0 = d.constituents[0]
    base_positions = list(c0.positions.values())
    inv_c0 = {pos: lab for lab, pos in c0.positions.items()}

    def matchings(c: Constituent) -> list:
        """Maps of c onto the frame with >= shared exact coincidences."""
        out = []
        seen = set()
        pts = list(c.positions.values())
        for src in itertools.permutations(pts, 3):
            for dst in itertools.combinations(base_positions, 3):
                try:
                    m = mobius_from_triples(list(src), list(dst))
                except DegenerateConfiguration:
                    continue
                hits = {}
                for lab, pos in c.positions.items():
                    img = m.apply(pos)
                    if img in inv_c0:
                        hits[lab] = inv_c0[img]
                if len(hits) < shared:
                    continue
                key = frozenset(hits.items())
                if key in seen:
                    continue
                seen.add(key)
                out.append((m, hits))
        return out

    results: list[ReconstructionResult] = []
    seen_outcomes = set()
    matchings_1 = matchings(d.constituents[1])
    matchings_2 = matchings(d.constituents[2])
    for m1, hits1 in matchings_1:
        by_c0_1 = {v: k for k, v in hits1.items()}
        for m2, hits2 in matchings_2:
            by_c0_2 = {v: k for k, v in hits2.items()}
            common = [lab for lab in c0.labels if lab in by_c0_1 and lab in by_c0_2]
            if len(common) != shared:
                continue
            # the outcome depends only on the shared subset and the images of
            # the unglued points; skip repeats before the expensive inverter
            glued1 = {by_c0_1[lab] for lab in common}
            glued2 = {by_c0_2[lab] for lab in common}
            key = (
                frozenset(c0.positions[lab] for lab in common),
                frozenset(m1.apply(pos) for lab, pos in d.constituents[1].positions.items()
                          if lab not in glued1),
                frozenset(m2.apply(pos) for lab, pos in d.constituents[2].positions.items()
                          if lab not in glued2),
            )
            if key in seen_outcomes:
                continue
            seen_outcomes.add(key)
            gluing = tuple(
                ((0, lab), (1, by_c0_1[lab]), (2, by_c0_2[lab])) for lab in common
            )
            trial = PrymDatum(
                case=d.case, g=d.g, pol_type=d.pol_type,
                constituents=d.constituents, gluing=gluing,
                extra_pairs=_derive_extra_pairs(d, gluing, (m1, m2)),
                v4=d.v4,
            )
            try:
                res = invert(trial)
            except NotInPrymImage:
                continue
            if not any(equivalent(res.config, prev.config)[0] for prev in results):
                results.append(res)
                if len(results) >= limit:
                    return results
    if not results:
        raise NotInPrymImage("label-free search exhausted",
                             "no consistent matching reproduces a configuration")
    return results


def _derive_extra_pairs(d: PrymDatum, gluing, maps) -> tuple:
    if d.case not in ("branched12", "mixed4"):
        return ()
    glued = [set() for _ in range(3)]
    for cls in gluing:
        for ci, lab in cls:
            glued[ci].add(lab)
    m = {0: None, 1: maps[0], 2: maps[1]}
    positions = [
        {lab: (pos if ci == 0 else m[ci].apply(pos))
         for lab, pos in d.constituents[ci].positions.items()
         if lab not in glued[ci]}
        for ci in range(3)
    ]
    pairs = []
    for (ci, cj) in ((0, 1), (0, 2), (1, 2)):
        for lab_i, pos_i in positions[ci].items():
            for lab_j, pos_j in positions[cj].items():
                if pos_i == pos_j:
                    pairs.append(((ci, lab_i), (cj, lab_j)))
    return tuple(pairs)
