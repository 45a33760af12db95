"""Detection heuristics: cyclic arbitrage, liquidations, sandwiches, and
flash-loan attribution, plus profit accounting through a price provider.

Profits are exact rationals in ETH; rendering to 18-digit fixed point is a
reporting concern.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .chain_model import ChainDataset, ChainId, EventLog, Layer, TxRecord, group_logs_by_tx
from .decoding import (FlashLoanAction, LiquidationAction, SwapAction, TransferAction,
                       decode_flashloan, decode_liquidation, decode_redeem, decode_swap,
                       decode_transfer)
from .registry import DEFAULT_REGISTRY, TopicRegistry

WEI = 10 ** 18
SECONDS_PER_DAY = 86400


# --- price provider (daily CSV fixture, CoinGecko-style) ---

class PriceProvider:
    """token/day -> ETH price as exact rational; 'ETHUSD' row carries the
    dollar series."""

    ETHUSD = "ETHUSD"

    def __init__(self, rows: Iterable[tuple] = ()):
        self._prices = {}
        for token, day, price in rows:
            self._prices[(token, int(day))] = Fraction(price)

    @classmethod
    def from_csv(cls, path) -> "PriceProvider":
        rows = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0] == "token_address":
                    continue
                token_raw, day, price = row[0], row[1], row[2]
                token = token_raw if token_raw == cls.ETHUSD else bytes.fromhex(
                    token_raw.removeprefix("0x"))
                rows.append((token, int(day), price))
        return cls(rows)

    def lookup(self, token: bytes, day: int) -> Optional[Fraction]:
        return self._prices.get((token, day))

    def eth_usd(self, day: int) -> Optional[Fraction]:
        return self._prices.get((self.ETHUSD, day))


def day_of(timestamp: int) -> int:
    return timestamp // SECONDS_PER_DAY


# --- findings ---

@dataclass(frozen=True)
class ArbitrageFinding:
    tx_hash: bytes
    cycle: tuple                 # ordered SwapActions forming the cycle
    token_balances: Mapping      # token -> signed big integer
    gain_eth: Optional[Fraction] = None
    cost_eth: Optional[Fraction] = None
    profit_eth: Optional[Fraction] = None
    unpriced: bool = False
    flash_loans: tuple = ()


@dataclass(frozen=True)
class LiquidationFinding:
    tx_hash: bytes
    actions: tuple               # LiquidationActions
    profit_eth: Optional[Fraction] = None
    unpriced: bool = False
    unredeemed: bool = False
    flash_loans: tuple = ()


@dataclass(frozen=True)
class SandwichFinding:
    front_tx: bytes
    back_tx: bytes
    victim_txs: tuple
    token: bytes
    attacker: bytes
    window: tuple                # (first block, last block)


# --- arbitrage ---

def _links(a: SwapAction, b: SwapAction) -> bool:
    return (a.token_out == b.token_in
            and a.amount_out >= b.amount_in
            and a.venue != b.venue)


def _cycle_balances(cycle: Sequence[SwapAction]) -> dict:
    # extractor's view: amounts entering the DEX are deducted, amounts
    # leaving the DEX are added
    balances: dict = {}
    for swap in cycle:
        balances[swap.token_in] = balances.get(swap.token_in, 0) - swap.amount_in
        balances[swap.token_out] = balances.get(swap.token_out, 0) + swap.amount_out
    return balances


def chain_cycles(swaps: Sequence[SwapAction]):
    """Greedy left-to-right chaining with restart.

    Ties broken by the earliest candidate; a chain that cannot close
    retires only its head swap. Returns cycles as index tuples.
    """
    n = len(swaps)
    # successor candidates per index, precomputed
    by_token_in: dict = {}
    for idx, swap in enumerate(swaps):
        by_token_in.setdefault(swap.token_in, []).append(idx)

    unused = set(range(n))
    order = list(range(n))
    cycles = []
    for head in order:
        while head in unused:
            chain = [head]
            in_chain = {head}
            closed = False
            while True:
                tail = swaps[chain[-1]]
                if len(chain) >= 2 and tail.token_out == swaps[chain[0]].token_in:
                    closed = True
                    break
                nxt = None
                for cand in by_token_in.get(tail.token_out, ()):
                    if cand <= chain[-1] or cand not in unused or cand in in_chain:
                        continue
                    if _links(tail, swaps[cand]):
                        nxt = cand
                        break
                if nxt is None:
                    break
                chain.append(nxt)
                in_chain.add(nxt)
            if closed:
                cycles.append(tuple(chain))
                unused -= in_chain
                # same head slot may seed another cycle only via later heads
            else:
                unused.discard(head)
                break
    return cycles


def detect_arbitrages(swaps_by_tx: Mapping[bytes, Sequence[SwapAction]]):
    """Cyclic-arbitrage findings per transaction; one tx may yield several."""
    findings = []
    for tx_hash, swaps in swaps_by_tx.items():
        for cycle_idx in chain_cycles(list(swaps)):
            cycle = tuple(swaps[i] for i in cycle_idx)
            findings.append(ArbitrageFinding(
                tx_hash=tx_hash,
                cycle=cycle,
                token_balances=_cycle_balances(cycle),
            ))
    return findings


def validate_arbitrage(finding: ArbitrageFinding) -> bool:
    """Independent re-check of the cycle predicates on an emitted finding."""
    cycle = finding.cycle
    if len(cycle) < 2:
        return False
    if cycle[-1].token_out != cycle[0].token_in:
        return False
    for a, b in zip(cycle, cycle[1:]):
        if not _links(a, b):
            return False
    return True


def _price_balances(balances: Mapping, prices: PriceProvider, day: int):
    gains = Fraction(0)
    costs = Fraction(0)
    unpriced = False
    for token, balance in balances.items():
        if balance == 0:
            continue
        price = prices.lookup(token, day)
        if price is None:
            unpriced = True
            continue
        value = Fraction(abs(balance), WEI) * price
        if balance > 0:
            gains += value
        else:
            costs += value
    return gains, costs, unpriced


def arbitrage_profit(finding: ArbitrageFinding, prices: PriceProvider,
                     tx: TxRecord, timestamp: int) -> ArbitrageFinding:
    gains, costs, unpriced = _price_balances(finding.token_balances, prices,
                                             day_of(timestamp))
    fees = Fraction(tx.fee_paid + tx.builder_payment, WEI)
    return replace(finding, gain_eth=gains, cost_eth=costs,
                   profit_eth=gains - costs - fees, unpriced=unpriced)


# --- liquidations ---

def detect_liquidations(logs: Sequence[EventLog],
                        registry: TopicRegistry = DEFAULT_REGISTRY):
    """One structural finding per tx containing at least one liquidation.

    Compound LiquidateBorrow actions are paired with Redeem events of the
    same tx in log order, first-unmatched-first.
    """
    findings = []
    for tx_hash, tx_logs in group_logs_by_tx(logs).items():
        actions = []
        redeems = []
        for log in tx_logs:
            action = decode_liquidation(log, registry)
            if action is not None:
                actions.append(action)
                continue
            redeem = decode_redeem(log, registry)
            if redeem is not None:
                redeems.append(redeem)
        if not actions:
            continue
        unmatched = list(redeems)
        paired = []
        unredeemed = False
        for action in actions:
            if action.protocol == "compound_v2" and action.collateral_amount is None:
                if unmatched:
                    _, token, amount = unmatched.pop(0)
                    action = action.with_collateral(token, amount)
                else:
                    unredeemed = True
            paired.append(action)
        findings.append(LiquidationFinding(tx_hash=tx_hash, actions=tuple(paired),
                                           unredeemed=unredeemed))
    return findings


def liquidation_profit(finding: LiquidationFinding, prices: PriceProvider,
                       tx: TxRecord, timestamp: int) -> LiquidationFinding:
    day = day_of(timestamp)
    total = Fraction(0)
    unpriced = False
    for action in finding.actions:
        debt_price = prices.lookup(action.debt_token, day)
        if debt_price is None:
            unpriced = True
        else:
            total -= Fraction(action.debt_amount, WEI) * debt_price
        if action.collateral_token is not None and action.collateral_amount is not None:
            col_price = prices.lookup(action.collateral_token, day)
            if col_price is None:
                unpriced = True
            else:
                total += Fraction(action.collateral_amount, WEI) * col_price
    total -= Fraction(tx.fee_paid + tx.builder_payment, WEI)
    return replace(finding, profit_eth=total, unpriced=unpriced)


# --- sandwiches ---

def detect_sandwiches(transfers: Sequence[TransferAction], chain: ChainId,
                      window: int = 100):
    """Find (front, victim+, back) transfer patterns.

    L1 searches within single blocks; L2 uses sliding windows of ``window``
    consecutive blocks with stride one, deduplicated by (front, back) tx.
    Both paths reduce to: the pair must fit inside one window.
    """
    span = 1 if chain.layer == Layer.L1 else window
    transfers = sorted(transfers, key=lambda t: t.position)

    by_token: dict = {}
    for idx, t in enumerate(transfers):
        by_token.setdefault(t.token, []).append(idx)

    findings = []
    seen = set()
    for token, idxs in by_token.items():
        by_pair: dict = {}
        for i in idxs:
            t = transfers[i]
            by_pair.setdefault((t.sender, t.receiver), []).append(i)
        for i in idxs:
            front = transfers[i]
            for j in by_pair.get((front.receiver, front.sender), ()):
                back = transfers[j]
                if back.position <= front.position:
                    continue
                if back.position[0] - front.position[0] > span - 1:
                    continue
                if back.tx_hash == front.tx_hash:
                    continue
                if back.amount > front.amount:
                    continue
                victims = []
                for k in idxs:
                    mid = transfers[k]
                    if not front.position < mid.position < back.position:
                        continue
                    if mid.tx_hash in (front.tx_hash, back.tx_hash):
                        continue
                    if mid.sender == front.sender and mid.receiver != front.receiver:
                        victims.append(mid.tx_hash)
                if not victims:
                    continue
                key = (front.tx_hash, back.tx_hash)
                if key in seen:
                    continue
                seen.add(key)
                findings.append(SandwichFinding(
                    front_tx=front.tx_hash,
                    back_tx=back.tx_hash,
                    victim_txs=tuple(dict.fromkeys(victims)),
                    token=token,
                    attacker=front.receiver,
                    window=(front.position[0], back.position[0]),
                ))
    findings.sort(key=lambda f: (f.window, f.front_tx, f.back_tx))
    return findings


# --- flash loans ---

def attribute_flash_loans(finding, tx_logs: Sequence[EventLog],
                          registry: TopicRegistry = DEFAULT_REGISTRY):
    loans = []
    for log in tx_logs:
        if log.tx_hash != finding.tx_hash:
            continue
        loan = decode_flashloan(log, registry)
        if loan is not None:
            loans.append(loan)
    return replace(finding, flash_loans=tuple(loans))


# --- dataset-level drivers ---

def extract_swaps(dataset: ChainDataset, pools=None,
                  registry: TopicRegistry = DEFAULT_REGISTRY):
    """Decode all swap events, grouped by tx in emission order."""
    swaps_by_tx: dict = {}
    for log in dataset.logs:
        try:
            swap = decode_swap(log, pools, registry)
        except Exception:
            continue
        if swap is not None:
            swaps_by_tx.setdefault(log.tx_hash, []).append(swap)
    return swaps_by_tx


def extract_transfers(dataset: ChainDataset,
                      registry: TopicRegistry = DEFAULT_REGISTRY):
    transfers = []
    for log in dataset.logs:
        try:
            t = decode_transfer(log, registry)
        except Exception:
            continue
        if t is not None:
            transfers.append(t)
    return transfers
