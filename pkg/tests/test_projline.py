import itertools
import random
from fractions import Fraction

import pytest

from kleinprym.errors import DegenerateConfiguration, InvalidConfig
from kleinprym.projline import (
    INF,
    MarkedConfig,
    Mobius,
    ProjPoint,
    canonical_form,
    config_key,
    cross_ratio,
    equivalent,
    mobius_from_triples,
)

from conftest import make_mobius, make_points


def pt(v):
    return ProjPoint.of(v)


class TestCrossRatio:
    def test_normalization_convention(self):
        assert cross_ratio(pt(0), pt(1), INF, pt(2)) == pt(2)

    def test_coincidence_with_first_point(self):
        assert cross_ratio(pt(0), pt(1), INF, pt(0)) == pt(0)

    def test_last_coincidences(self):
        assert cross_ratio(pt(0), pt(1), INF, pt(1)) == pt(1)
        assert cross_ratio(pt(0), pt(1), INF, INF) == INF

    def test_mobius_invariance_100_random_maps(self, rng):
        pts = [pt(1), pt(2), pt(3), pt(4)]
        base = cross_ratio(*pts)
        for _ in range(100):
            m = make_mobius(rng)
            imgs = [m.apply(p) for p in pts]
            assert cross_ratio(*imgs) == base

    def test_degenerate_input(self):
        with pytest.raises(DegenerateConfiguration):
            cross_ratio(pt(0), pt(0), pt(1), pt(2))


class TestMobiusFromTriples:
    def test_identity(self):
        m = mobius_from_triples([pt(0), pt(1), INF], [pt(0), pt(1), INF])
        assert m.is_identity()

    def test_constructed_map_evaluates(self):
        m = mobius_from_triples([pt(1), pt(2), pt(3)], [pt(0), pt(1), INF])
        assert m.apply(pt(1)) == pt(0)
        assert m.apply(pt(2)) == pt(1)
        assert m.apply(pt(3)) == INF

    def test_composition_uniqueness(self, rng):
        for _ in range(20):
            a = make_points(rng, 3)
            b = make_points(rng, 3)
            c = make_points(rng, 3)
            ab = mobius_from_triples(a, b)
            bc = mobius_from_triples(b, c)
            ac = mobius_from_triples(a, c)
            assert bc.compose(ab).normalized() == ac.normalized()

    def test_repeated_point_rejected(self):
        with pytest.raises(DegenerateConfiguration):
            mobius_from_triples([pt(0), pt(0), pt(1)], [pt(0), pt(1), INF])

    def test_infinity_in_source(self):
        m = mobius_from_triples([INF, pt(1), pt(0)], [pt(0), pt(1), INF])
        assert m.apply(INF) == pt(0)
        assert m.apply(pt(0)) == INF


class TestMarkedConfig:
    def test_distinctness_enforced(self):
        with pytest.raises(DegenerateConfiguration):
            MarkedConfig.make([(0, "w1"), (0, "w2")])

    def test_role_uniqueness(self):
        with pytest.raises(InvalidConfig):
            MarkedConfig.make([(0, "x"), (1, "x")])

    def test_w_contiguity(self):
        with pytest.raises(InvalidConfig):
            MarkedConfig.make([(0, "w1"), (1, "w3")])

    def test_json_roundtrip(self):
        cfg = MarkedConfig.make([(0, "w1"), (Fraction(1, 2), "w2"), (None, "x"),
                                 (3, "y"), (4, "z")])
        again = MarkedConfig.from_json(cfg.to_json())
        assert again == cfg


class TestCanonicalForm:
    def test_already_anchored_fixed(self):
        cfg = MarkedConfig.make([(0, "w1"), (1, "w2"), (None, "w3"), (2, "w4")])
        assert canonical_form(cfg) == cfg

    def test_mobius_image_same_key(self, rng):
        cfg = MarkedConfig.make([(0, "w1"), (1, "w2"), (7, "w3"), (2, "x"),
                                 (3, "y"), (5, "z")])
        key = config_key(cfg)
        for _ in range(100):
            m = make_mobius(rng)
            assert config_key(cfg.apply(m)) == key

    def test_idempotent(self, rng):
        for _ in range(25):
            pts = make_points(rng, 6)
            cfg = MarkedConfig(tuple(pts),
                               ("w1", "w2", "w3", "x", "y", "z"))
            once = canonical_form(cfg)
            assert canonical_form(once) == once

    def test_distinct_cross_ratios_distinct_forms(self):
        # brute force over 4-point W-configs: the canonical key separates
        # exactly the cross-ratio orbits of the unordered W-set
        values = [Fraction(n) for n in range(-2, 5)]
        seen = {}
        for quad in itertools.combinations(values, 4):
            cfg = MarkedConfig.make([(v, f"w{i+1}") for i, v in enumerate(quad)])
            key = config_key(cfg)
            for other_key, other_cfg in seen.items():
                eq, _ = equivalent(cfg, other_cfg)
                assert eq == (key == other_key)
            seen[key] = cfg


class TestEquivalent:
    def test_reflexive_identity_witness(self):
        cfg = MarkedConfig.make([(0, "w1"), (1, "w2"), (4, "w3"), (9, "x"),
                                 (3, "y"), (5, "z")])
        ok, wit = equivalent(cfg, cfg)
        assert ok and wit.mobius.is_identity()

    def test_mobius_image_equivalent_with_sound_witness(self, rng):
        cfg = MarkedConfig.make([(0, "w1"), (1, "w2"), (4, "w3"), (9, "x"),
                                 (3, "y"), (5, "z")])
        for _ in range(40):
            m = make_mobius(rng)
            image = cfg.apply(m)
            ok, wit = equivalent(cfg, image)
            assert ok
            # witness soundness: the map carries points onto points with the
            # reported relabeling, exactly
            for i, j in enumerate(wit.index_map):
                assert wit.mobius.apply(cfg.points[i]) == image.points[j]

    def test_different_w_sets_inequivalent(self):
        a = MarkedConfig.make([(0, "w1"), (1, "w2"), (None, "w3"), (2, "w4")])
        b = MarkedConfig.make([(0, "w1"), (1, "w2"), (None, "w3"), (3, "w4")])
        ok, _ = equivalent(a, b)
        assert not ok

    def test_w_permutation_equivalent(self):
        a = MarkedConfig.make([(0, "w1"), (1, "w2"), (None, "w3"), (2, "w4")])
        b = MarkedConfig.make([(2, "w1"), (1, "w2"), (None, "w3"), (0, "w4")])
        ok, _ = equivalent(a, b)
        assert ok

    def test_triple_unordered_by_default(self):
        a = MarkedConfig.make([(0, "w1"), (1, "w2"), (6, "w3"), (2, "x"),
                               (3, "y"), (5, "z")])
        b = MarkedConfig.make([(0, "w1"), (1, "w2"), (6, "w3"), (3, "x"),
                               (2, "y"), (5, "z")])
        assert equivalent(a, b)[0]
        assert not equivalent(a, b, unordered_triple=False)[0]

    def test_dist_role_pinned(self):
        a = MarkedConfig.make([(0, "w1"), (1, "w2"), (6, "w3"), (2, "dist"),
                               (3, "y"), (5, "z")])
        b = MarkedConfig.make([(0, "w1"), (1, "w2"), (6, "w3"), (3, "dist"),
                               (2, "y"), (5, "z")])
        assert not equivalent(a, b)[0]
        # but swapping only y and z stays equivalent
        c = MarkedConfig.make([(0, "w1"), (1, "w2"), (6, "w3"), (2, "dist"),
                               (5, "y"), (3, "z")])
        assert equivalent(a, c)[0]

    def test_equivalence_relation_on_random_orbits(self, rng):
        base_pts = make_points(rng, 6)
        roles = ("w1", "w2", "w3", "x", "y", "z")
        a = MarkedConfig(tuple(base_pts), roles)
        perm = list(range(3))
        rng.shuffle(perm)
        b_pts = [base_pts[perm[i]] if i < 3 else base_pts[i] for i in range(6)]
        m = make_mobius(rng)
        b = MarkedConfig(tuple(m.apply(p) for p in b_pts), roles)
        c = b.apply(make_mobius(rng))
        # symmetry and transitivity
        assert equivalent(a, b)[0] and equivalent(b, a)[0]
        assert equivalent(b, c)[0]
        assert equivalent(a, c)[0]

    def test_size_mismatch(self):
        a = MarkedConfig.make([(0, "w1"), (1, "w2"), (2, "w3"), (3, "w4")])
        b = MarkedConfig.make([(0, "w1"), (1, "w2"), (2, "w3"), (3, "w4"), (4, "w5"), (5, "w6")])
        assert equivalent(a, b) == (False, None)
