"""Shared fixture builders and independent oracles used across the suite.

Oracles here are deliberately naive re-implementations (linear scans,
exhaustive enumeration) so the production code is checked against
independently derived answers, not against itself.
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from mevlens.chain_model import ETHEREUM, ChainId
from mevlens.decoding import SwapAction, TransferAction
from mevlens.fixtures import FixtureBuilder, addr, enc_balancer_v1_swap, enc_transfer


def make_swap(token_in, token_out, amount_in, amount_out, venue,
              position=(1, 0, 0), tx_hash=b"\x11" * 32) -> SwapAction:
    return SwapAction(venue=venue, token_in=token_in, token_out=token_out,
                      amount_in=amount_in, amount_out=amount_out,
                      position=position, tx_hash=tx_hash)


def make_transfer(token, sender, receiver, amount, position, tx_hash) -> TransferAction:
    return TransferAction(token=token, sender=sender, receiver=receiver,
                          amount=amount, position=position, tx_hash=tx_hash)


# --- arbitrage oracle: naive greedy chaining, no index structures ---

def _oracle_links(a: SwapAction, b: SwapAction) -> bool:
    return (a.token_out == b.token_in and a.amount_out >= b.amount_in
            and a.venue != b.venue)


def oracle_cycles(swaps):
    """Greedy left-to-right chaining by direct quadratic scan."""
    n = len(swaps)
    unused = set(range(n))
    cycles = []
    for head in range(n):
        if head not in unused:
            continue
        chain = [head]
        closed = False
        while True:
            tail = swaps[chain[-1]]
            if len(chain) >= 2 and tail.token_out == swaps[chain[0]].token_in:
                closed = True
                break
            nxt = None
            for cand in range(chain[-1] + 1, n):
                if cand in unused and cand not in chain and _oracle_links(tail, swaps[cand]):
                    nxt = cand
                    break
            if nxt is None:
                break
            chain.append(nxt)
        if closed:
            cycles.append(tuple(chain))
            unused -= set(chain)
        else:
            unused.discard(head)
    return cycles


def random_swap_tx(rng: random.Random, max_swaps: int = 8):
    """A synthetic transaction's swap list biased toward chainable amounts."""
    tokens = [addr(0x100 + i) for i in range(4)]
    venues = [addr(0x200 + i) for i in range(3)]
    n = rng.randint(1, max_swaps)
    swaps = []
    for i in range(n):
        t_in, t_out = rng.sample(tokens, 2)
        amount_in = rng.randint(1, 50)
        amount_out = rng.randint(1, 50)
        swaps.append(make_swap(t_in, t_out, amount_in, amount_out,
                               rng.choice(venues), position=(1, 0, i)))
    return swaps


# --- sandwich oracle: literal sliding windows, brute force per window ---

def oracle_sandwiches(transfers, span: int):
    transfers = sorted(transfers, key=lambda t: t.position)
    if not transfers:
        return set()
    blocks = sorted({t.position[0] for t in transfers})
    found = set()
    for start in range(blocks[0], blocks[-1] + 1):
        window = [t for t in transfers if start <= t.position[0] <= start + span - 1]
        for front in window:
            for back in window:
                if back.position <= front.position:
                    continue
                if back.token != front.token:
                    continue
                if (back.sender, back.receiver) != (front.receiver, front.sender):
                    continue
                if back.tx_hash == front.tx_hash or back.amount > front.amount:
                    continue
                victims = [m for m in window
                           if front.position < m.position < back.position
                           and m.token == front.token
                           and m.tx_hash not in (front.tx_hash, back.tx_hash)
                           and m.sender == front.sender
                           and m.receiver != front.receiver]
                if victims:
                    found.add((front.tx_hash, back.tx_hash))
    return found


def random_transfer_blocks(rng: random.Random, n_blocks: int = 4,
                           per_block: int = 6):
    """Random transfers over a few blocks with a small address alphabet so
    sandwich-shaped patterns occur by chance."""
    tokens = [addr(0x300 + i) for i in range(2)]
    parties = [addr(0x400 + i) for i in range(3)]
    transfers = []
    tx_n = 0
    for b in range(1, n_blocks + 1):
        for i in range(rng.randint(1, per_block)):
            tx_n += 1
            transfers.append(make_transfer(
                token=rng.choice(tokens),
                sender=rng.choice(parties),
                receiver=rng.choice(parties),
                amount=rng.randint(1, 20),
                position=(b, i, i),
                tx_hash=tx_n.to_bytes(32, "big"),
            ))
    return transfers


# --- planted arbitrage demo fixture (criterion: 25 findings) ---

TOKEN_A = addr(0xA1)
TOKEN_B = addr(0xB1)
TOKEN_C = addr(0xC1)
VENUE_1 = addr(0xD1)
VENUE_2 = addr(0xD2)
VENUE_3 = addr(0xD3)
VENUE_4 = addr(0xD4)


def build_planted_arb_dataset(chain: ChainId = ETHEREUM):
    """21 single-cycle txs + 2 txs with two cycles each = 25 findings,
    plus non-cycle noise. Returns (dataset, expected cycle signatures)."""
    fb = FixtureBuilder(chain)
    expected = []

    def swap_log(venue, t_in, t_out, a_in, a_out):
        topics, data = enc_balancer_v1_swap(addr(0xEE), t_in, t_out, a_in, a_out)
        fb.log(venue, topics, data)

    # 21 single-cycle transactions, alternating 2- and 3-swap cycles
    for i in range(21):
        fb.block()
        tx = fb.tx(fee=10 ** 15)
        if i % 2 == 0:
            swap_log(VENUE_1, TOKEN_A, TOKEN_B, 100 + i, 205)
            swap_log(VENUE_2, TOKEN_B, TOKEN_A, 205, 110 + i)
            expected.append((tx, 2))
        else:
            swap_log(VENUE_1, TOKEN_A, TOKEN_B, 100 + i, 205)
            swap_log(VENUE_2, TOKEN_B, TOKEN_C, 200, 310)
            swap_log(VENUE_3, TOKEN_C, TOKEN_A, 310, 120 + i)
            expected.append((tx, 3))

    # 2 transactions carrying two disjoint cycles each
    for _ in range(2):
        fb.block()
        tx = fb.tx(fee=10 ** 15)
        swap_log(VENUE_1, TOKEN_A, TOKEN_B, 100, 205)
        swap_log(VENUE_2, TOKEN_B, TOKEN_A, 205, 111)
        swap_log(VENUE_3, TOKEN_B, TOKEN_C, 400, 505)
        swap_log(VENUE_4, TOKEN_C, TOKEN_B, 505, 410)
        expected.append((tx, 2))
        expected.append((tx, 2))

    # noise: single swaps and same-venue non-cycles
    for _ in range(5):
        fb.block()
        fb.tx()
        swap_log(VENUE_1, TOKEN_A, TOKEN_B, 50, 49)
    fb.block()
    fb.tx()
    swap_log(VENUE_1, TOKEN_A, TOKEN_B, 100, 205)
    swap_log(VENUE_1, TOKEN_B, TOKEN_A, 205, 110)  # same venue: no cycle

    return fb.dataset(), expected


@pytest.fixture
def planted_arb_dataset():
    return build_planted_arb_dataset()


# --- misc ---

@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def frac(x) -> Fraction:
    return Fraction(x)


# --- cross-layer join fixture (criterion: 9 candidates, 5 orphans) ---

XL_POOL = addr(0x777)
XL_TA = addr(0x7A1)
XL_TB = addr(0x7B2)
XL_VICTIM = addr(0x7E0)

# delays (seconds) for the 25 matched links, in planting order; ascending
# within each rollup so L2 block timestamps stay monotone
XL_DELAYS = ([0, 0, 60, 60, 120, 120, 600, 600] * 2
             + [0, 0, 45, 60, 60, 120, 120, 600, 600])


def xl_pools_meta():
    from mevlens.amm import PoolInfo
    return {XL_POOL: PoolInfo(XL_POOL, "constant_product", (XL_TA, XL_TB), 3, 1000)}


def build_crosslayer_fixture():
    """L1 dataset plus one L2 dataset per rollup.

    30 bridge interactions: 10 per rollup, of which 3 L1 emissions have no
    L2 execution and 2 L2 executions have no L1 emission; 9 of the 25
    matched links carry the swapped-transfer victim pattern (4 Arbitrum,
    4 Optimism, 1 zkSync).
    """
    from mevlens.chain_model import ARBITRUM, ETHEREUM, OPTIMISM, ZKSYNC
    from mevlens.fixtures import (FixtureBuilder, enc_inbox_message,
                                  enc_priority_request, enc_redeem_scheduled,
                                  enc_relayed_message, enc_token_swap,
                                  enc_transaction_deposited, enc_transfer,
                                  optimism_message_hash)

    l1 = FixtureBuilder(ETHEREUM, start_block=1000, start_timestamp=1_700_000_000)
    l2s = {"arbitrum": FixtureBuilder(ARBITRUM, start_block=5000),
           "optimism": FixtureBuilder(OPTIMISM, start_block=6000),
           "zksync": FixtureBuilder(ZKSYNC, start_block=7000)}
    bridges = {"arbitrum": addr(0x1001), "optimism": addr(0x1002),
               "zksync": addr(0x1003)}
    delays = iter(XL_DELAYS)
    swap_txs = []

    def l2_execute(rollup, l2_logs, l1_ts, with_swap):
        fb = l2s[rollup]
        fb.block(timestamp=l1_ts + next(delays))
        tx = fb.tx()
        for address, topics, data in l2_logs:
            fb.log(address, topics, data)
        if with_swap:
            t, d = enc_transfer(XL_VICTIM, XL_POOL, 10 ** 4)
            fb.log(XL_TA, t, d)
            t, d = enc_token_swap(XL_VICTIM, 10 ** 4, 9900, 0, 1)
            fb.log(XL_POOL, t, d)
            t, d = enc_transfer(XL_POOL, XL_VICTIM, 10 ** 4)
            fb.log(XL_TA, t, d)
            swap_txs.append(tx)
        return tx

    # Arbitrum: 8 matched (msgs 1..8, first 4 swap-bearing), 1 unlinked L1,
    # 1 unlinked L2
    for i in range(1, 9):
        l1.block()
        l1.tx()
        topics, data = enc_inbox_message(i)
        l1.log(bridges["arbitrum"], topics, data)
        t, d = enc_redeem_scheduled(i)
        l2_execute("arbitrum", [(bridges["arbitrum"], t, d)], l1.timestamp, i <= 4)
    l1.block()
    l1.tx()
    topics, data = enc_inbox_message(100)
    l1.log(bridges["arbitrum"], topics, data)
    fb = l2s["arbitrum"]
    fb.block()
    fb.tx()
    t, d = enc_redeem_scheduled(200)
    fb.log(bridges["arbitrum"], t, d)

    # Optimism: 8 matched (first 4 swap-bearing), 1 unlinked L1, 1 unlinked L2
    for i in range(1, 9):
        payload = b"opt-%d" % i
        l1.block()
        l1.tx()
        topics, data = enc_transaction_deposited(payload)
        l1.log(bridges["optimism"], topics, data)
        t, d = enc_relayed_message(optimism_message_hash(payload))
        l2_execute("optimism", [(bridges["optimism"], t, d)], l1.timestamp, i <= 4)
    l1.block()
    l1.tx()
    topics, data = enc_transaction_deposited(b"opt-unlinked")
    l1.log(bridges["optimism"], topics, data)
    fb = l2s["optimism"]
    fb.block()
    fb.tx()
    t, d = enc_relayed_message(optimism_message_hash(b"opt-orphan"))
    fb.log(bridges["optimism"], t, d)

    # zkSync: 9 matched (1 swap-bearing), 1 unlinked L1
    for i in range(1, 10):
        l1.block()
        l1_tx = l1.tx()
        topics, data = enc_priority_request()
        l1.log(bridges["zksync"], topics, data)
        fb = l2s["zksync"]
        fb.block(timestamp=l1.timestamp + next(delays))
        fb.tx(tx_hash=l1_tx)
        if i == 1:
            t, d = enc_transfer(XL_VICTIM, XL_POOL, 10 ** 4)
            fb.log(XL_TA, t, d)
            t, d = enc_token_swap(XL_VICTIM, 10 ** 4, 9900, 0, 1)
            fb.log(XL_POOL, t, d)
            t, d = enc_transfer(XL_POOL, XL_VICTIM, 10 ** 4)
            fb.log(XL_TA, t, d)
            swap_txs.append(l1_tx)
    l1.block()
    l1.tx()  # priority request whose hash has no L2 transaction
    topics, data = enc_priority_request()
    l1.log(bridges["zksync"], topics, data)

    return (l1.dataset(), {name: fb.dataset() for name, fb in l2s.items()},
            swap_txs)


# --- in-memory victim scenarios (criterion: 50-victim capital sweep) ---

def build_victim_scenarios(n=50):
    """Synthetic victims of staged sizes over constant-product pools."""
    from mevlens.amm import cp_pool
    from mevlens.chain_model import ARBITRUM
    from mevlens.crosslayer import CrossLayerLink, VictimCandidate, VictimSwap

    scenarios = []
    for i in range(n):
        reserve = 10 ** 6 * (1 + i % 7)
        amount = reserve // 20 + 137 * i
        delay = (0, 15, 45, 120, 600)[i % 5]
        link = CrossLayerLink(rollup=ARBITRUM, l1_tx=bytes([i]) * 32,
                              l2_tx=bytes([i, 1]) * 16, link_key=bytes([i]),
                              l1_timestamp=1_700_000_000 + i,
                              l2_timestamp=1_700_000_000 + i + delay)
        victim = VictimCandidate(
            link=link,
            swap=VictimSwap(token_in=XL_TA, token_out=XL_TB, amount_in=amount),
            pool=XL_POOL,
        )
        pool = cp_pool(reserve, reserve, tokens=(XL_TA, XL_TB))
        scenarios.append({
            "victim": victim,
            "pool_state": pool,
            "token_in_price_eth": Fraction(10 ** 12),   # 1 token unit ~ 1e-6 ETH
            "eth_usd": Fraction(2000),
        })
    return scenarios
