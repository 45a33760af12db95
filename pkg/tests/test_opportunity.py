import json
from fractions import Fraction

from mevlens.amm import PoolInfo, cp_pool
from mevlens.chain_model import ETHEREUM
from mevlens.detectors import ArbitrageFinding, LiquidationFinding
from mevlens.decoding import LiquidationAction
from mevlens.fixtures import FixtureBuilder, addr, enc_answer_updated, enc_balancer_v1_swap
from mevlens.opportunity import (FOUND, NOT_FOUND, UNSIMULATABLE,
                                 StateProvider, block_distance_cdf,
                                 detect_competition,
                                 find_arbitrage_opportunity,
                                 find_liquidation_opportunity, reverted_rate)
from conftest import make_swap

A, B = addr(0xA1), addr(0xB1)
P1, P2 = addr(0xD1), addr(0xD2)
F = 200  # finding block


def _finding(tx=b"\x10" * 32):
    cycle = (make_swap(A, B, 1000, 999, P1, position=(F, 0, 0), tx_hash=tx),
             make_swap(B, A, 999, 1008, P2, position=(F, 0, 1), tx_hash=tx))
    return ArbitrageFinding(tx, cycle, {A: 8, B: 0})


def _balanced():
    return cp_pool(10 ** 6, 10 ** 6, tokens=(A, B), fee_num=0, fee_den=1)


def _imbalanced():
    # extra A in the second pool makes the A->B->A cycle profitable
    return cp_pool(11 * 10 ** 5, 10 ** 6, tokens=(A, B), fee_num=0, fee_den=1)


def plant_arb_scenario(distance):
    """Opportunity swap at block F-distance; returns (dataset, provider,
    planted candidate tx hash)."""
    provider = StateProvider()
    provider.add_pool(P1, 0, _balanced())
    provider.add_pool(P2, 0, _balanced())
    provider.add_pool(P2, F - distance, _imbalanced())

    fb = FixtureBuilder(ETHEREUM, start_block=F - distance)
    fb.block(number=F - distance)
    tx = fb.tx()
    topics, data = enc_balancer_v1_swap(addr(0xEE), B, A, 10 ** 5, 1008 * 10 ** 2)
    fb.log(P2, topics, data)
    fb.block(number=F)
    fb.tx()
    return fb.dataset(), provider, tx


def test_planted_distances_exact():
    for d in (1, 5, 37, 99, 100):
        ds, provider, tx = plant_arb_scenario(d)
        r = find_arbitrage_opportunity(_finding(), ds, provider)
        assert r.status == FOUND
        assert r.block_distance == d
        assert r.opportunity_tx == tx
        assert not r.approximate


def test_planted_distance_zero_is_approximate_boundary():
    # the closest prior block is already unprofitable: the crossing sits
    # between the finding and block F-1
    provider = StateProvider()
    provider.add_pool(P1, 0, _balanced())
    provider.add_pool(P2, 0, _balanced())
    fb = FixtureBuilder(ETHEREUM, start_block=F - 1)
    fb.block(number=F - 1)
    fb.tx()
    topics, data = enc_balancer_v1_swap(addr(0xEE), B, A, 10, 9)
    fb.log(P2, topics, data)
    ds = fb.dataset()
    r = find_arbitrage_opportunity(_finding(), ds, provider)
    assert r.status == FOUND and r.block_distance == 0
    assert r.opportunity_tx is None and r.approximate


def test_planted_distance_101_not_found():
    ds, provider, _ = plant_arb_scenario(101)
    r = find_arbitrage_opportunity(_finding(), ds, provider)
    assert r.status == NOT_FOUND


def test_no_candidate_swaps_not_found():
    provider = StateProvider()
    provider.add_pool(P1, 0, _balanced())
    provider.add_pool(P2, 0, _imbalanced())
    fb = FixtureBuilder(ETHEREUM, start_block=F)
    fb.block(number=F)
    fb.tx()
    r = find_arbitrage_opportunity(_finding(), fb.dataset(), provider)
    assert r.status == NOT_FOUND


def test_missing_pool_state_unsimulatable():
    ds, provider, _ = plant_arb_scenario(5)
    bare = StateProvider()  # no pool snapshots at all
    r = find_arbitrage_opportunity(_finding(), ds, bare)
    assert r.status == UNSIMULATABLE


# --- liquidations ---

def _liq_finding(protocol="aave_v2v3", tx=b"\x20" * 32):
    action = LiquidationAction(protocol=protocol, liquidator=addr(6),
                               borrower=addr(5), debt_token=B, debt_amount=100,
                               collateral_token=A, collateral_amount=150,
                               position=(F, 0, 0), tx_hash=tx)
    return LiquidationFinding(tx, (action,))


def _oracle_fixture(update_blocks):
    fb = FixtureBuilder(ETHEREUM, start_block=min(update_blocks))
    txs = {}
    for b in sorted(update_blocks):
        fb.block(number=b)
        txs[b] = fb.tx()
        topics, data = enc_answer_updated(10 ** 8)
        fb.log(addr(0xFE), topics, data)
    fb.block(number=F)
    fb.tx()
    return fb.dataset(), txs


def test_hf_series_stop_rule():
    # hf 0.97, 0.98, 1.02 at distances 2, 7, 11 -> opportunity at d=7
    ds, txs = _oracle_fixture([F - 2, F - 7, F - 11])
    provider = StateProvider()
    provider.add_health(addr(5), F - 11, Fraction(102, 100))
    provider.add_health(addr(5), F - 7, Fraction(98, 100))
    provider.add_health(addr(5), F - 2, Fraction(97, 100))
    r = find_liquidation_opportunity(_liq_finding(), ds, provider)
    assert r.status == FOUND and r.block_distance == 7
    assert r.opportunity_tx == txs[F - 7]


def test_hf_closed_at_closest_is_boundary():
    ds, txs = _oracle_fixture([F - 3])
    provider = StateProvider()
    provider.add_health(addr(5), 0, Fraction(101, 100))
    r = find_liquidation_opportunity(_liq_finding(), ds, provider)
    assert r.status == FOUND and r.block_distance == 0 and r.approximate


def test_shortfall_never_zero_not_found():
    ds, _ = _oracle_fixture([F - 3, F - 50])
    provider = StateProvider()
    provider.add_shortfall(addr(5), 0, 42)
    r = find_liquidation_opportunity(_liq_finding("compound_v2"), ds, provider)
    assert r.status == NOT_FOUND


def test_shortfall_stop_rule():
    ds, txs = _oracle_fixture([F - 4, F - 9])
    provider = StateProvider()
    provider.add_shortfall(addr(5), 0, 0)
    provider.add_shortfall(addr(5), F - 9, 17)
    r = find_liquidation_opportunity(_liq_finding("compound_v2"), ds, provider)
    assert r.status == FOUND and r.block_distance == 9
    assert r.opportunity_tx == txs[F - 9]


# --- snapshot file loading ---

def test_state_provider_from_jsonl(tmp_path):
    pools_meta = {P1: PoolInfo(P1, "constant_product", (A, B), 0, 1)}
    path = tmp_path / "snap.jsonl"
    rows = [
        {"kind": "pool", "key": "0x" + P1.hex(), "block": 3,
         "value": {"reserves": ["1000", "2000"]}},
        {"kind": "health", "key": "0x" + addr(5).hex(), "block": 1, "value": "0.97"},
        {"kind": "shortfall", "key": "0x" + addr(5).hex(), "block": 2, "value": 7},
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    sp = StateProvider.from_jsonl(path, pools_meta)
    assert sp.pool_state(P1, 2) is None
    assert sp.pool_state(P1, 9).reserves == (1000, 2000)
    assert sp.health_factor(addr(5), 5) == Fraction(97, 100)
    assert sp.shortfall(addr(5), 2) == 7


# --- distributions / competition / reverted rate ---

def _result(distance, status=FOUND):
    from mevlens.opportunity import OpportunityResult
    return OpportunityResult(b"", status, b"\x01" * 32, distance)


def test_cdf_counting_oracle():
    results = [_result(0), _result(1), _result(1), _result(3)]
    cdf = dict(block_distance_cdf(results, horizon=3))
    assert cdf[0] == Fraction(1, 4)
    assert cdf[1] == Fraction(3, 4)
    assert cdf[2] == Fraction(3, 4)
    assert cdf[3] == 1


def test_cdf_monotone_and_ends_at_one():
    results = [_result(d) for d in (5, 17, 99)] + [_result(None, NOT_FOUND)]
    cdf = block_distance_cdf(results, horizon=100)
    values = [v for _, v in cdf]
    assert values == sorted(values) and values[-1] == 1


def test_cdf_empty():
    assert block_distance_cdf([], horizon=100) == []


def test_competition_grouping():
    opp = b"\x0a" * 32
    entries = [
        ("arb", opp, addr(1), "f1"),
        ("arb", opp, addr(2), "f2"),
        ("arb", b"\x0b" * 32, addr(1), "f3"),     # alone on its opportunity
        ("arb", b"\x0c" * 32, addr(3), "f4"),     # same extractor twice
        ("arb", b"\x0c" * 32, addr(3), "f5"),
        ("liq", None, addr(4), "f6"),             # unresolved: ignored
    ]
    groups = detect_competition(entries)
    assert len(groups) == 1
    assert groups[0]["opportunity_tx"] == opp
    assert groups[0]["extractors"] == sorted([addr(1), addr(2)])
    assert set(groups[0]["findings"]) == {"f1", "f2"}


def test_reverted_rate():
    per, agg = reverted_rate({
        addr(1): ["success"] * 10,
        addr(2): ["reverted"] * 39 + ["success"] * 61,
        addr(3): [],
    })
    assert per[addr(1)] == 0
    assert per[addr(2)] == Fraction(39, 100)
    assert per[addr(3)] is None
    assert agg == Fraction(39, 110)
    assert reverted_rate({})[1] is None
