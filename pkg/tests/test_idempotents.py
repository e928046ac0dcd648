import pytest

from kleinprym.idempotents import (
    DeckRingElem,
    involution_pair,
    norm_endos,
    verify_decomposition,
    verify_involution_pair,
)

S = DeckRingElem((0, 1, 0, 0))
T = DeckRingElem((0, 0, 1, 0))
ST = DeckRingElem((0, 0, 0, 1))
ONE = DeckRingElem((1, 0, 0, 0))


class TestRing:
    def test_involution_squares(self):
        assert S * S == ONE
        assert T * T == ONE
        assert ST * ST == ONE

    def test_group_law(self):
        assert S * T == ST
        assert T * S == ST
        assert S * ST == T

    def test_one_plus_s_times_one_minus_s(self):
        plus, minus = involution_pair()
        assert (plus * minus).is_zero()

    def test_full_sum_squares_to_four_times_itself(self):
        f0 = ONE + S + T + ST
        assert f0 * f0 == f0.scale(4)

    def test_str(self):
        assert str(ONE + S + T + ST) == "1+s+t+st"
        assert str(DeckRingElem((1, 1, -1, -1))) == "1+s-t-st"


class TestNormEndos:
    def test_sum_is_four(self):
        endos = list(norm_endos("branched_klein").values())
        total = endos[0]
        for e in endos[1:]:
            total = total + e
        assert total == DeckRingElem.const(4)

    def test_pairwise_products_vanish(self):
        endos = list(norm_endos("etale_klein").values())
        for i in range(4):
            for j in range(4):
                if i != j:
                    assert (endos[i] * endos[j]).is_zero()

    def test_squares(self):
        for e in norm_endos("etale_klein").values():
            assert e * e == e.scale(4)

    def test_case_labels(self):
        assert set(norm_endos("etale_klein")) == {"JH*", "JH_x", "JH_y", "JH_z"}
        assert set(norm_endos("branched_klein")) == {
            "JH*_{s,st}", "JH*_{s,it}", "JH*_{t,is}", "JE"}

    def test_unknown_case(self):
        with pytest.raises(ValueError):
            norm_endos("nope")


class TestLedger:
    def test_eleven_identities_hold(self):
        for case in ("etale_klein", "branched_klein"):
            report = verify_decomposition(case=case)
            assert len(report["identities"]) == 11
            assert report["all_hold"]

    def test_tampered_sign_flip_flagged(self):
        endos = list(norm_endos("etale_klein").values())
        bad = list(endos)
        bad[1] = DeckRingElem((1, -1, 1, 1))  # sign flip on s
        report = verify_decomposition(bad)
        assert not report["all_hold"]
        violated = [i["identity"] for i in report["identities"] if not i["holds"]]
        assert violated  # the specific failures are named

    def test_involution_pair_ledger(self):
        report = verify_involution_pair()
        assert report["all_hold"]
        assert report["product_zero"] and report["sum_is_two"]
