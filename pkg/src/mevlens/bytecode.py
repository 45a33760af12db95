"""EVM runtime bytecode normalization and identical-skeleton clustering.

Normalization removes every PUSH opcode with its operand bytes and strips
the trailing Solidity CBOR metadata segment, so deployments differing only
in embedded constants collapse to one digest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .chain_model import CHAINS, ChainId
from .keccak import keccak256

PUSH1 = 0x60
PUSH32 = 0x7F
DELEGATECALL = 0xF4


@dataclass(frozen=True)
class BytecodeRecord:
    chain: ChainId
    address: bytes
    code: bytes
    verified: bool = False


@dataclass(frozen=True)
class NormalizedCode:
    skeleton: bytes
    digest: bytes


def strip_metadata(code: bytes) -> bytes:
    """Drop the trailing CBOR metadata segment when the final two bytes
    declare a plausible length and the segment opens with a CBOR map
    header; otherwise return the code unchanged."""
    if len(code) < 2:
        return code
    declared = int.from_bytes(code[-2:], "big")
    if declared == 0 or declared + 2 > len(code):
        return code
    start = len(code) - 2 - declared
    # CBOR major type 5 (map) header byte: 0xa0..0xbf
    if code[start] & 0xE0 != 0xA0:
        return code
    return code[:start]


def normalize(code: bytes) -> NormalizedCode:
    """Linear disassembly copying every non-PUSH byte; PUSH1..PUSH32 skip
    the opcode plus its operand bytes (truncated operands skip to end)."""
    body = strip_metadata(code)
    skeleton = bytearray()
    i = 0
    n = len(body)
    while i < n:
        op = body[i]
        if PUSH1 <= op <= PUSH32:
            i += 1 + (op - PUSH1 + 1)
        else:
            skeleton.append(op)
            i += 1
    skeleton = bytes(skeleton)
    return NormalizedCode(skeleton=skeleton, digest=keccak256(skeleton))


@dataclass(frozen=True)
class Cluster:
    digest: bytes
    members: tuple          # (chain, address) pairs
    chains: tuple           # distinct chain names, sorted

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def cross_chain(self) -> bool:
        return len(self.chains) > 1


def cluster(records) -> list:
    """Group unverified, non-proxy records by skeleton digest.

    Excluded: records with verified=True and records whose skeleton
    contains DELEGATECALL (scanned post PUSH removal so operand bytes
    cannot cause false exclusion). Every retained record lands in exactly
    one cluster.
    """
    groups: dict = {}
    for rec in records:
        if rec.verified:
            continue
        norm = normalize(rec.code)
        if DELEGATECALL in norm.skeleton:
            continue
        groups.setdefault(norm.digest, []).append((rec.chain, rec.address))
    clusters = []
    for digest, members in groups.items():
        members.sort(key=lambda m: (m[0].name, m[1]))
        chains = tuple(sorted({m[0].name for m in members}))
        clusters.append(Cluster(digest=digest, members=tuple(members), chains=chains))
    clusters.sort(key=lambda c: (-c.size, c.digest))
    return clusters


def load_bytecode_fixture(path) -> list:
    """JSONL rows: {chain, address, code_hex, verified}."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            obj = json.loads(raw)
            records.append(BytecodeRecord(
                chain=CHAINS[obj["chain"]],
                address=bytes.fromhex(obj["address"].removeprefix("0x")),
                code=bytes.fromhex(obj["code_hex"].removeprefix("0x")),
                verified=bool(obj.get("verified", False)),
            ))
    return records
