import random

import pytest

from kleinprym.errors import InvalidDatum, NotInPrymImage
from kleinprym.projline import MarkedConfig, equivalent
from kleinprym.prym import PrymDatum, prym_datum
from kleinprym.reconstruct import (
    fiber_enumerate_b4,
    invert,
    invert_unlabeled,
    noninjectivity_witness_b2,
    random_config,
    roundtrip,
)
from kleinprym.towers import build_tower


ETALE_CFG = MarkedConfig.make(
    [(0, "w1"), (1, "w2"), (2, "w3"), (3, "x"), (4, "y"), (5, "z")])
BRANCHED_CFG = MarkedConfig.make(
    [(0, "w1"), (1, "w2"), (2, "w3"), (3, "w4"), (4, "x"), (5, "y"), (6, "z")])
MIXED8_CFG = MarkedConfig.make(
    [(0, "w1"), (1, "w2"), (2, "w3"), (3, "dist"), (4, "y"), (5, "z")])
MIXED4_CFG = MarkedConfig.make(
    [(0, "w1"), (1, "w2"), (2, "w3"), (3, "w4"), (4, "dist"), (5, "y"), (6, "z")])


def datum_of(cfg, case, seed=None):
    return prym_datum(build_tower(cfg, case), scramble=seed)


class TestRoundTrips:
    def test_etale_seed17(self):
        ok, witness, result = roundtrip(ETALE_CFG, "etale_klein", seed=17)
        assert ok
        # the recovered triple is {3, 4, 5} up to the unordered relabeling
        trip = sorted(result.certificate["triple"].values())
        got, _ = equivalent(result.config, ETALE_CFG)
        assert got

    def test_unscrambled_identity_recovery(self):
        for cfg, case in ((ETALE_CFG, "etale_klein"),
                          (BRANCHED_CFG, "branched12"),
                          (MIXED8_CFG, "mixed8"),
                          (MIXED4_CFG, "mixed4")):
            result = invert(datum_of(cfg, case))
            assert all(a["mobius"].is_identity() for a in result.alignment)
            assert set(result.config.points) == set(cfg.points)

    def test_branched_seed7(self):
        ok, _, _ = roundtrip(BRANCHED_CFG, "branched12", seed=7)
        assert ok

    def test_mixed8_resolves_unique_x(self):
        ok, _, result = roundtrip(MIXED8_CFG, "mixed8", seed=5)
        assert ok
        assert result.certificate["v4_resolution"]["x"]

    def test_mixed8_x_unique_among_candidates(self):
        # solve the kernel-group equation against every candidate label: only
        # the distinguished one fits
        from kleinprym.reconstruct import _solve_v4
        from kleinprym.torsion import WUniverse, class_from_subset, span
        d = datum_of(MIXED8_CFG, "mixed8")
        h = d.constituents[0]
        universe = WUniverse(h.labels)
        v4 = span(universe, [class_from_subset(universe, gen) for gen in d.v4])
        assert _solve_v4(universe, v4, "y", "z") == "x"
        solutions = []
        for candidate in h.labels:
            if candidate in ("y", "z"):
                continue
            want = span(universe, [class_from_subset(universe, (candidate, "y")),
                                   class_from_subset(universe, ("y", "z"))])
            if want == v4:
                solutions.append(candidate)
        assert solutions == ["x"]

    def test_mixed4_seed3(self):
        ok, _, _ = roundtrip(MIXED4_CFG, "mixed4", seed=3)
        assert ok

    def test_inverse_determinism_across_scrambles(self):
        for case, cfg in (("etale_klein", ETALE_CFG), ("branched12", BRANCHED_CFG),
                          ("mixed8", MIXED8_CFG), ("mixed4", MIXED4_CFG)):
            r1 = invert(datum_of(cfg, case, seed=1))
            r2 = invert(datum_of(cfg, case, seed=2))
            ok, _ = equivalent(r1.config, r2.config)
            assert ok

    @pytest.mark.parametrize("case,gmin", [
        ("etale_klein", 2), ("mixed8", 2), ("branched12", 1), ("mixed4", 1)])
    def test_random_batches(self, case, gmin):
        rng = random.Random(f"batch:{case}")
        for k in range(12):
            g = gmin + k % (5 - gmin)
            cfg = random_config(case, g, rng)
            ok, _, _ = roundtrip(cfg, case, seed=7000 + k)
            assert ok, (case, g, k)


def _tamper_delete_class(d: PrymDatum) -> PrymDatum:
    return PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                     constituents=d.constituents, gluing=d.gluing[1:],
                     extra_pairs=d.extra_pairs, v4=d.v4)


def _tamper_v4(d: PrymDatum) -> PrymDatum:
    h = d.constituents[0]
    labels = list(h.labels)
    bad_v4 = ((labels[0], labels[1]), (labels[2], labels[3]))
    return PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                     constituents=d.constituents, gluing=d.gluing,
                     extra_pairs=d.extra_pairs, v4=bad_v4)


def _tamper_extras(d: PrymDatum) -> PrymDatum:
    # rewire the pairwise identifications so claimed partners never coincide
    (a1, b1), (a2, b2), (a3, b3) = d.extra_pairs
    bad = ((a1, b2), (a2, b3), (a3, b1))
    return PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                     constituents=d.constituents, gluing=d.gluing,
                     extra_pairs=bad, v4=d.v4)


class TestNegativeControls:
    def test_deleted_gluing_class(self):
        d = datum_of(ETALE_CFG, "etale_klein", seed=9)
        with pytest.raises(NotInPrymImage) as err:
            invert(_tamper_delete_class(d))
        assert err.value.violation

    def test_tampered_v4(self):
        d = datum_of(MIXED8_CFG, "mixed8", seed=9)
        with pytest.raises(NotInPrymImage) as err:
            invert(_tamper_v4(d))
        assert "V4" in err.value.violation

    def test_v4_of_solvable_shape_only_if_consistent(self):
        # a V4 spanned by {x,y} and {z,w1} contains no class {y,z}; rejected
        d = datum_of(MIXED8_CFG, "mixed8")
        bad = PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                        constituents=d.constituents, gluing=d.gluing,
                        v4=(("x", "y"), ("z", "w1")))
        with pytest.raises(NotInPrymImage):
            invert(bad)

    def test_mismatched_extras(self):
        d = datum_of(BRANCHED_CFG, "branched12", seed=9)
        with pytest.raises(NotInPrymImage):
            invert(_tamper_extras(d))

    def test_mixed4_swapped_extras(self):
        d = datum_of(MIXED4_CFG, "mixed4", seed=9)
        pair = d.extra_pairs[0]
        # claim a different leftover of the third constituent is glued
        (ci, lab_i), (cj, lab_j) = pair
        other = next(lab for lab in d.constituents[cj].labels
                     if lab != lab_j and not any(
                         lab == l and c == cj
                         for cls in d.gluing for c, l in cls))
        bad = PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                        constituents=d.constituents, gluing=d.gluing,
                        extra_pairs=(((ci, lab_i), (cj, other)),), v4=d.v4)
        with pytest.raises(NotInPrymImage):
            invert(bad)

    def test_failures_carry_violation(self):
        d = datum_of(ETALE_CFG, "etale_klein", seed=4)
        try:
            invert(_tamper_delete_class(d))
        except NotInPrymImage as exc:
            assert exc.violation == "wrong number of gluing classes"


class TestDatumShapeErrors:
    def test_wrong_case(self):
        d = datum_of(ETALE_CFG, "etale_klein")
        relabeled = PrymDatum(case="mixed8", g=d.g, pol_type=d.pol_type,
                              constituents=d.constituents, gluing=d.gluing,
                              v4=(("x", "y"), ("y", "z")))
        with pytest.raises(InvalidDatum):
            invert(relabeled)

    def test_wrong_constituent_count(self):
        d = datum_of(ETALE_CFG, "etale_klein")
        with pytest.raises(InvalidDatum):
            invert(PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                             constituents=d.constituents[:2], gluing=d.gluing))

    def test_dispatch_unknown_case(self):
        d = datum_of(ETALE_CFG, "etale_klein")
        bad = PrymDatum(case="b2_double", g=d.g, pol_type=d.pol_type,
                        constituents=d.constituents, gluing=d.gluing)
        with pytest.raises(InvalidDatum):
            invert(bad)


class TestWitnessB2:
    def test_witness_valid(self):
        w = noninjectivity_witness_b2(1, 3)
        assert w["prym_branch_equal"]
        assert not w["configs_equivalent"]

    def test_both_towers_validate(self):
        from kleinprym.towers import validate_tower
        w = noninjectivity_witness_b2(2, 5)
        for t in w["towers"]:
            assert validate_tower(t)["ok"]

    def test_moving_z_back_restores_equivalence(self):
        w = noninjectivity_witness_b2(1, 3)
        c1 = MarkedConfig.from_json(w["configs"][0])
        same = MarkedConfig.from_json(w["configs"][0])
        assert equivalent(c1, same, unordered_triple=False)[0]

    def test_three_z_values_pairwise_inequivalent(self):
        w1 = noninjectivity_witness_b2(1, 11)
        c1 = MarkedConfig.from_json(w1["configs"][0])
        c2 = MarkedConfig.from_json(w1["configs"][1])
        w2 = noninjectivity_witness_b2(1, 12)
        c3 = MarkedConfig.from_json(w2["configs"][1])
        configs = [c1, c2, c3]
        branch_sets = []
        for c in configs:
            t = build_tower(c, "b2_double")
            branch_sets.append(sorted(str(p)
                               for p in t.node("Hprime").branch_image.values()))
        # same Prym data only when the shared part coincides
        assert branch_sets[0] == branch_sets[1]
        pairs = [(0, 1)]
        if branch_sets[2] == branch_sets[0]:
            pairs += [(0, 2), (1, 2)]
        for i, j in pairs:
            assert not equivalent(configs[i], configs[j],
                                  unordered_triple=False)[0]


class TestFiberB4:
    def test_counts(self):
        assert fiber_enumerate_b4(2)[1] == 15
        assert fiber_enumerate_b4(3)[1] == 28

    def test_classes_pairwise_distinct(self):
        classes, count = fiber_enumerate_b4(2)
        assert len(set(classes)) == count == len(classes)

    def test_g1_not_supported(self):
        with pytest.raises(InvalidDatum):
            fiber_enumerate_b4(1)


class TestUnlabeledSearch:
    def test_etale_membership(self):
        d = datum_of(ETALE_CFG, "etale_klein", seed=23)
        stripped = PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                             constituents=d.constituents, gluing=d.gluing)
        results = invert_unlabeled(stripped, limit=200)
        assert any(equivalent(ETALE_CFG, r.config)[0] for r in results)
        # without the gluing table the reconstruction is genuinely ambiguous
        assert len(results) > 1

    def test_branched_membership(self):
        d = datum_of(BRANCHED_CFG, "branched12", seed=11)
        stripped = PrymDatum(case=d.case, g=d.g, pol_type=d.pol_type,
                             constituents=d.constituents, gluing=d.gluing)
        results = invert_unlabeled(stripped)
        assert any(equivalent(BRANCHED_CFG, r.config)[0] for r in results)

    def test_guard(self):
        rng = random.Random(0)
        cfg = random_config("etale_klein", 3, rng)
        d = datum_of(cfg, "etale_klein", seed=1)
        with pytest.raises(InvalidDatum):
            invert_unlabeled(d)


class TestCertificates:
    def test_result_serializes(self):
        result = invert(datum_of(BRANCHED_CFG, "branched12", seed=2))
        blob = result.to_json()
        assert blob["certificate"]["case"] == "branched12"
        assert len(blob["alignment"]) == 3
