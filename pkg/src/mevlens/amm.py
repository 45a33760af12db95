"""Deterministic AMM pool simulators: constant-product and StableSwap.

All arithmetic is exact (Python integers, floor division) so replays are
reproducible and match EVM semantics. No floating point in this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import BrokenPath, DrainedPool, EmptyPool, NoConvergence, UnknownToken

CONSTANT_PRODUCT = "constant_product"
STABLESWAP = "stableswap"

DEFAULT_AMP = 200
MAX_ITERATIONS = 255


@dataclass(frozen=True)
class PoolState:
    kind: str
    tokens: tuple            # ordered token addresses
    reserves: tuple          # unsigned big integers, same length
    fee_num: int = 0
    fee_den: int = 1
    amp: int = DEFAULT_AMP   # stableswap only

    def __post_init__(self):
        assert self.kind in (CONSTANT_PRODUCT, STABLESWAP)
        assert len(self.tokens) == len(self.reserves)
        if self.kind == CONSTANT_PRODUCT:
            assert len(self.tokens) == 2
        else:
            assert len(self.tokens) >= 2 and self.amp > 0
        assert 0 <= self.fee_num < self.fee_den

    def index_of(self, token) -> int:
        try:
            return self.tokens.index(token)
        except ValueError:
            raise UnknownToken(f"token 0x{token.hex() if isinstance(token, bytes) else token} not in pool")

    def with_reserves(self, reserves) -> "PoolState":
        return replace(self, reserves=tuple(reserves))


def cp_pool(reserve0: int, reserve1: int, tokens=(b"\x00" * 20, b"\x01" * 20),
            fee_num: int = 3, fee_den: int = 1000) -> PoolState:
    return PoolState(CONSTANT_PRODUCT, tuple(tokens), (reserve0, reserve1),
                     fee_num, fee_den)


def stable_pool(reserves, tokens=None, amp: int = DEFAULT_AMP,
                fee_num: int = 4, fee_den: int = 10000) -> PoolState:
    if tokens is None:
        tokens = tuple(bytes([i]) * 20 for i in range(len(reserves)))
    return PoolState(STABLESWAP, tuple(tokens), tuple(reserves), fee_num, fee_den, amp)


@dataclass(frozen=True)
class SwapQuote:
    amount_in: int
    amount_out: int
    post_state: PoolState


def cp_swap_out(pool: PoolState, token_in, amount_in: int) -> SwapQuote:
    """x*y=k swap with fee applied on input, floor division throughout."""
    assert pool.kind == CONSTANT_PRODUCT
    assert amount_in > 0
    i = pool.index_of(token_in)
    j = 1 - i
    r_in, r_out = pool.reserves[i], pool.reserves[j]
    if r_in <= 0 or r_out <= 0:
        raise EmptyPool("pool has an empty reserve")
    a = amount_in * (pool.fee_den - pool.fee_num) // pool.fee_den
    amount_out = r_out * a // (r_in + a)
    reserves = list(pool.reserves)
    reserves[i] += amount_in
    reserves[j] -= amount_out
    return SwapQuote(amount_in, amount_out, pool.with_reserves(reserves))


def stable_D(pool: PoolState) -> int:
    """Solve the StableSwap invariant for D by Newton iteration.

    A*n^n*sum(x) + D = A*D*n^n + D^(n+1) / (n^n * prod(x))
    """
    assert pool.kind == STABLESWAP
    xs = pool.reserves
    if any(x <= 0 for x in xs):
        raise EmptyPool("stableswap pool has an empty reserve")
    return _stable_D(xs, pool.amp)


def _stable_D(xs: Sequence[int], amp: int) -> int:
    n = len(xs)
    s = sum(xs)
    if s == 0:
        return 0
    d = s
    ann = amp * n ** n
    for _ in range(MAX_ITERATIONS):
        d_p = d
        for x in xs:
            d_p = d_p * d // (n * x)
        d_prev = d
        d = (ann * s + n * d_p) * d // ((ann - 1) * d + (n + 1) * d_p)
        if abs(d - d_prev) <= 1:
            return d
    raise NoConvergence("D solver did not converge in 255 iterations")


def _stable_y(xs: Sequence[int], amp: int, i: int, j: int, new_x_i: int, d: int) -> int:
    """Balance of coin j that keeps the invariant at D when coin i moves to
    new_x_i; standard quadratic Newton iteration."""
    n = len(xs)
    ann = amp * n ** n
    c = d
    s = 0
    for k in range(n):
        if k == j:
            continue
        x = new_x_i if k == i else xs[k]
        s += x
        c = c * d // (x * n)
    c = c * d // (ann * n)
    b = s + d // ann
    y = d
    for _ in range(MAX_ITERATIONS):
        y_prev = y
        y = (y * y + c) // (2 * y + b - d)
        if abs(y - y_prev) <= 1:
            return y
    raise NoConvergence("y solver did not converge in 255 iterations")


def stable_swap_out(pool: PoolState, token_in, token_out, amount_in: int) -> SwapQuote:
    assert pool.kind == STABLESWAP
    assert amount_in > 0
    i = pool.index_of(token_in)
    j = pool.index_of(token_out)
    assert i != j
    d = stable_D(pool)
    new_x = pool.reserves[i] + amount_in
    y = _stable_y(pool.reserves, pool.amp, i, j, new_x, d)
    gross_out = pool.reserves[j] - y - 1  # conservative rounding
    amount_out = gross_out - gross_out * pool.fee_num // pool.fee_den
    if amount_out <= 0:
        raise DrainedPool("swap produces no output")
    reserves = list(pool.reserves)
    reserves[i] = new_x
    reserves[j] -= amount_out
    return SwapQuote(amount_in, amount_out, pool.with_reserves(reserves))


def swap_out(pool: PoolState, token_in, token_out, amount_in: int) -> SwapQuote:
    """Kind-dispatching swap."""
    if pool.kind == CONSTANT_PRODUCT:
        i = pool.index_of(token_in)
        if pool.tokens[1 - i] != token_out:
            raise UnknownToken("token_out not in pool")
        return cp_swap_out(pool, token_in, amount_in)
    return stable_swap_out(pool, token_in, token_out, amount_in)


def apply_swap(pool: PoolState, quote: SwapQuote) -> PoolState:
    return quote.post_state


@dataclass(frozen=True)
class PathHop:
    pool_key: object     # key into the pools mapping
    token_in: bytes
    token_out: bytes


def simulate_path(pools: dict, path: Sequence[PathHop], amount_in: int):
    """Sequentially replay a swap path over a mutable copy of pool states.

    Returns (final_amount, updated pools dict). Hops must chain: the
    token_out of hop i is the token_in of hop i+1.
    """
    states = dict(pools)
    amount = amount_in
    prev_out = None
    for hop in path:
        if prev_out is not None and hop.token_in != prev_out:
            raise BrokenPath("hop token_in does not match previous token_out")
        if hop.pool_key not in states:
            raise BrokenPath(f"unknown pool {hop.pool_key!r}")
        quote = swap_out(states[hop.pool_key], hop.token_in, hop.token_out, amount)
        states[hop.pool_key] = quote.post_state
        amount = quote.amount_out
        prev_out = hop.token_out
    return amount, states


# --- pool metadata sidecar ---

@dataclass(frozen=True)
class PoolInfo:
    address: bytes
    kind: str
    tokens: tuple
    fee_num: int
    fee_den: int
    amp: int = DEFAULT_AMP

    def state(self, reserves) -> PoolState:
        return PoolState(self.kind, self.tokens, tuple(reserves),
                         self.fee_num, self.fee_den, self.amp)


def load_pool_metadata(path) -> dict:
    """JSON sidecar: {pool address: {kind, tokens, fee_num, fee_den, amp}}."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    pools = {}
    for addr_hex, obj in raw.items():
        addr = bytes.fromhex(addr_hex.removeprefix("0x"))
        pools[addr] = PoolInfo(
            address=addr,
            kind=obj["kind"],
            tokens=tuple(bytes.fromhex(t.removeprefix("0x")) for t in obj["tokens"]),
            fee_num=int(obj.get("fee_num", 3 if obj["kind"] == CONSTANT_PRODUCT else 4)),
            fee_den=int(obj.get("fee_den", 1000 if obj["kind"] == CONSTANT_PRODUCT else 10000)),
            amp=int(obj.get("amp", DEFAULT_AMP)),
        )
    return pools


def dump_pool_metadata(pools: dict, path) -> None:
    out = {}
    for addr, info in sorted(pools.items()):
        out["0x" + addr.hex()] = {
            "kind": info.kind,
            "tokens": ["0x" + t.hex() for t in info.tokens],
            "fee_num": info.fee_num,
            "fee_den": info.fee_den,
            "amp": info.amp,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
        fh.write("\n")
