import itertools
import random

import pytest

from kleinprym.errors import (
    InvalidCover,
    NotLiftableRepresentation,
    OddParity,
    UniverseMismatch,
)
from kleinprym.projline import MarkedConfig
from kleinprym.torsion import (
    KleinType,
    TwoTorsionClass,
    WUniverse,
    add,
    class_from_subset,
    classify_klein,
    intersect,
    is_isotropic,
    member,
    norm_2tor,
    pullback_2tor,
    span,
    subgroup_sum,
    weil_pairing,
    zero_class,
)
from kleinprym.towers import build_tower

U6 = WUniverse(tuple(f"w{i}" for i in range(1, 7)))
U8 = WUniverse(tuple(f"w{i}" for i in range(1, 9)))


def cls(universe, *labels):
    return class_from_subset(universe, labels)


def even_subsets(universe):
    n = universe.size
    for mask in range(1 << n):
        if bin(mask).count("1") % 2 == 0:
            yield mask


class TestClasses:
    def test_empty_is_zero(self):
        assert cls(U6).is_zero

    def test_full_universe_is_zero(self):
        assert cls(U6, *U6.labels).is_zero

    def test_complement_pair_identified(self):
        assert cls(U6, "w1", "w2") == cls(U6, "w3", "w4", "w5", "w6")

    def test_odd_subset_rejected(self):
        with pytest.raises(OddParity):
            cls(U6, "w1")

    def test_odd_universe_rejected(self):
        with pytest.raises(OddParity):
            WUniverse(("a", "b", "c"))

    def test_canonical_rep_avoids_last_label(self):
        c = cls(U6, "w5", "w6")
        assert "w6" not in c.label_set()


class TestAdd:
    def test_self_inverse(self):
        a = cls(U6, "w1", "w2")
        assert add(a, a).is_zero

    def test_symmetric_difference(self):
        assert add(cls(U6, "w1", "w2"), cls(U6, "w2", "w3")) == cls(U6, "w1", "w3")

    def test_universe_mismatch(self):
        with pytest.raises(UniverseMismatch):
            add(cls(U6, "w1", "w2"), cls(U8, "w1", "w2"))

    def test_against_divisor_oracle_exhaustive(self):
        # oracle: add coefficient vectors mod 2, then identify complements
        for ma, mb in itertools.product(even_subsets(U6), repeat=2):
            raw = ma ^ mb
            a = class_from_subset(U6, U6.labels_of(ma))
            b = class_from_subset(U6, U6.labels_of(mb))
            got = add(a, b)
            assert got.bits in (raw, raw ^ U6.full_mask)
            # canonical: never contains the last label
            assert not (got.bits >> (U6.size - 1)) & 1

    def test_complement_rewriting_case(self):
        # {1,2} + {3,4,5,6} = {1,2} + complement({1,2}) = 0... via both routes
        a = cls(U6, "w1", "w2")
        b = cls(U6, "w3", "w4", "w5", "w6")
        assert add(a, b).is_zero


class TestWeilPairing:
    def test_self_pairing_trivial(self):
        for mask in even_subsets(U8):
            c = class_from_subset(U8, U8.labels_of(mask))
            assert weil_pairing(c, c) == 1

    def test_adjacent_transpositions(self):
        assert weil_pairing(cls(U6, "w1", "w2"), cls(U6, "w2", "w3")) == -1

    def test_disjoint_supports(self):
        assert weil_pairing(cls(U6, "w1", "w2"), cls(U6, "w3", "w4")) == 1

    def test_complement_invariance_exhaustive_up_to_8(self):
        for universe in (WUniverse(("a", "b", "c", "d")), U6, U8):
            full = universe.full_mask
            for ma, mb in itertools.product(even_subsets(universe), repeat=2):
                a = class_from_subset(universe, universe.labels_of(ma))
                b = class_from_subset(universe, universe.labels_of(mb))
                direct = -1 if bin(ma & mb).count("1") % 2 else 1
                flipped = -1 if bin((ma ^ full) & mb).count("1") % 2 else 1
                assert weil_pairing(a, b) == direct == flipped

    def test_bilinearity_random(self, rng):
        masks = list(even_subsets(U8))
        for _ in range(2000):
            a, b, c = (class_from_subset(U8, U8.labels_of(rng.choice(masks)))
                       for _ in range(3))
            assert weil_pairing(add(a, b), c) == weil_pairing(a, c) * weil_pairing(b, c)

    def test_nondegeneracy_exhaustive_g_le_3(self):
        for g in (1, 2, 3):
            universe = WUniverse(tuple(f"w{i}" for i in range(1, 2 * g + 3)))
            classes = {class_from_subset(universe, universe.labels_of(m))
                       for m in even_subsets(universe)}
            for a in classes:
                if a.is_zero:
                    continue
                assert any(weil_pairing(a, b) == -1 for b in classes)


class TestSubgroups:
    def test_trivial_span(self):
        grp = span(U6, [])
        assert grp.order() == 1
        assert member(grp, zero_class(U6))

    def test_all_pairs_span_full_group(self):
        for g in (1, 2, 3):
            universe = WUniverse(tuple(f"w{i}" for i in range(1, 2 * g + 3)))
            gens = [class_from_subset(universe, p)
                    for p in itertools.combinations(universe.labels, 2)]
            assert span(universe, gens).order() == 2 ** (2 * g)

    def test_block_span_order(self):
        # g = 1: four 4-point blocks inside a 16-label universe span 2^(2g)
        universe = WUniverse(tuple((i, g) for i in range(1, 5)
                                   for g in ("1", "s", "t", "st")))
        blocks = [class_from_subset(universe, [(i, g) for g in ("1", "s", "t", "st")])
                  for i in range(1, 5)]
        diffs = [add(blocks[0], b) for b in blocks[1:]]
        assert span(universe, diffs).order() == 4

    def test_rank_law_random(self, rng):
        masks = list(even_subsets(U8))
        for _ in range(50):
            gens_a = [class_from_subset(U8, U8.labels_of(rng.choice(masks)))
                      for _ in range(rng.randint(1, 5))]
            gens_b = [class_from_subset(U8, U8.labels_of(rng.choice(masks)))
                      for _ in range(rng.randint(1, 5))]
            a, b = span(U8, gens_a), span(U8, gens_b)
            inter, total = intersect(a, b), subgroup_sum(a, b)
            assert a.rank + b.rank == total.rank + inter.rank
            # brute-force oracle for the intersection
            ea = {c.bits for c in a.elements()}
            eb = {c.bits for c in b.elements()}
            assert ea & eb == {c.bits for c in inter.elements()}
            for c in inter.elements():
                assert member(a, c) and member(b, c)

    def test_membership(self):
        grp = span(U6, [cls(U6, "w1", "w2"), cls(U6, "w3", "w4")])
        assert member(grp, cls(U6, "w1", "w2", "w3", "w4"))
        assert not member(grp, cls(U6, "w1", "w3"))

    def test_universe_mismatch(self):
        with pytest.raises(UniverseMismatch):
            span(U6, [cls(U8, "w1", "w2")])


class TestKleinClassification:
    def test_non_isotropic(self):
        assert classify_klein(cls(U6, "w4", "w5"), cls(U6, "w5", "w6")) is \
            KleinType.NON_ISOTROPIC_KLEIN

    def test_isotropic(self):
        assert classify_klein(cls(U6, "w1", "w2"), cls(U6, "w3", "w4")) is \
            KleinType.ISOTROPIC_KLEIN

    def test_degenerate(self):
        a = cls(U6, "w1", "w2")
        assert classify_klein(a, a) is KleinType.DEGENERATE
        assert classify_klein(a, zero_class(U6)) is KleinType.DEGENERATE

    def test_isotropy_of_spans(self):
        iso = span(U6, [cls(U6, "w1", "w2"), cls(U6, "w3", "w4")])
        assert is_isotropic(iso)
        non = span(U6, [cls(U6, "w1", "w2"), cls(U6, "w2", "w3")])
        assert not is_isotropic(non)


def branched_tower(g=1):
    pts = [(i, f"w{i + 1}") for i in range(2 * g + 2)]
    pts += [(100, "x"), (101, "y"), (102, "z")]
    return build_tower(MarkedConfig.make(pts), "branched12")


class TestTransport:
    def test_pullback_of_defining_class_vanishes(self):
        t = branched_tower()
        edge = t.edge("T_x", "H_x")
        assert pullback_2tor(edge, edge.defining).is_zero

    def test_pullback_splits_weierstrass_fiber(self):
        t = branched_tower()
        edge = t.edge("T_x", "H_x")
        c = class_from_subset(edge.target_universe, ("w1", "uy"))
        got = pullback_2tor(edge, c)
        want = class_from_subset(edge.source_universe, ((1, "1"), (1, "s")))
        assert got == want

    def test_norm_of_block_choice_is_defining_class(self):
        t = branched_tower()
        edge = t.edge("T_x", "H_x")
        src = edge.source_universe
        q = class_from_subset(src, [(i, "1") for i in range(1, 5)])
        assert norm_2tor(edge, q) == edge.defining
        # any block choice norms to the same class
        q2 = class_from_subset(src, [(1, "s"), (2, "1"), (3, "s"), (4, "1")])
        assert norm_2tor(edge, q2) == edge.defining

    def test_norm_pullback_contract_and_kernel(self):
        t = branched_tower()
        edge = t.edge("T_x", "H_x")
        tgt = edge.target_universe
        kernel = []
        for mask in even_subsets(tgt):
            c = class_from_subset(tgt, tgt.labels_of(mask))
            up = pullback_2tor(edge, c)
            assert norm_2tor(edge, up).is_zero
            if up.is_zero:
                kernel.append(c)
        assert set(kernel) == {zero_class(tgt), edge.defining}

    def test_branched_pullback_injective(self):
        t = branched_tower()
        edge = t.edge("T_x", "E")  # branched in four points
        tgt = edge.target_universe
        kernel = {class_from_subset(tgt, tgt.labels_of(m))
                  for m in even_subsets(tgt)
                  if pullback_2tor(edge, class_from_subset(tgt, tgt.labels_of(m))).is_zero}
        assert kernel == {zero_class(tgt)}

    def test_degree4_etale_kernel_is_klein_group(self):
        cfg = MarkedConfig.make([(0, "w1"), (1, "w2"), (2, "w3"),
                                 (3, "x"), (4, "y"), (5, "z")])
        t = build_tower(cfg, "etale_klein")
        edge = t.edge("Ctilde", "H")
        tgt = edge.target_universe
        kernel = {class_from_subset(tgt, tgt.labels_of(m))
                  for m in even_subsets(tgt)
                  if pullback_2tor(edge, class_from_subset(tgt, tgt.labels_of(m))).is_zero}
        assert kernel == set(edge.defining.elements())
        assert len(kernel) == 4

    def test_partial_edge_reports_not_liftable(self):
        class PartialEdge:
            source_universe = WUniverse(tuple((i, k) for i in (1, 2) for k in ("0", "1")))
            target_universe = U6
            # only w1 and w2 have fiber data; w3..w6 unknown on this edge
            fibers = {"w1": ((1, "0"), (1, "1")), "w2": ((2, "0"), (2, "1"))}
            proj = {}

        with pytest.raises(NotLiftableRepresentation):
            pullback_2tor(PartialEdge(), cls(U6, "w1", "w3"))

    def test_zero_class_not_a_cover(self):
        from kleinprym.towers import check_etale_hyperelliptic
        with pytest.raises(InvalidCover):
            check_etale_hyperelliptic(zero_class(U6))
