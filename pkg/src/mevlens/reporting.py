"""Report emission: findings JSONL and the summary CSV tables.

All outputs are deterministic: stable ordering, fixed key order, no wall
clock anywhere.
"""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from fractions import Fraction
from typing import Optional, Sequence

from .chain_model import to_hex

FIXED_PLACES = 18


def fmt_fixed(value: Optional[Fraction], places: int = FIXED_PLACES) -> Optional[str]:
    """Render an exact rational as a fixed-point decimal string (round
    toward zero)."""
    if value is None:
        return None
    sign = "-" if value < 0 else ""
    scaled = abs(value) * 10 ** places
    units = scaled.numerator // scaled.denominator
    whole, frac = divmod(units, 10 ** places)
    return f"{sign}{whole}.{str(frac).zfill(places)}"


def month_of(timestamp: int) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y-%m")


def p90(values: Sequence[Fraction]) -> Fraction:
    """Nearest-rank 90th percentile: value at rank ceil(0.9*n), ascending."""
    xs = sorted(values)
    rank = math.ceil(Fraction(9, 10) * len(xs))
    return xs[max(rank, 1) - 1]


def profit_stats(values: Sequence[Fraction]) -> dict:
    """The reported statistics set: Total, Max, P90, Mean, Median, Min."""
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        return {k: None for k in ("total", "max", "p90", "mean", "median", "min")}
    mid = n // 2
    median = xs[mid] if n % 2 else (xs[mid - 1] + xs[mid]) / 2
    return {
        "total": sum(xs),
        "max": xs[-1],
        "p90": p90(xs),
        "mean": sum(xs) / n,
        "median": median,
        "min": xs[0],
    }


# --- findings serialization ---

def _swap_json(s):
    return {
        "venue": to_hex(s.venue),
        "token_in": to_hex(s.token_in),
        "token_out": to_hex(s.token_out),
        "amount_in": str(s.amount_in),
        "amount_out": str(s.amount_out),
        "position": list(s.position),
    }


def _flashloan_json(fl):
    return {"provider": fl.provider, "token": to_hex(fl.token),
            "amount": str(fl.amount), "fee": str(fl.fee)}


def arbitrage_to_json(finding, chain: str, timestamp: int, extractor=None) -> dict:
    return {
        "type": "arbitrage",
        "chain": chain,
        "tx_hash": to_hex(finding.tx_hash),
        "block": finding.cycle[0].position[0],
        "timestamp": timestamp,
        "extractor": to_hex(extractor) if extractor else None,
        "cycle": [_swap_json(s) for s in finding.cycle],
        "balances": {to_hex(t): str(b) for t, b in sorted(finding.token_balances.items())},
        "gain_eth": fmt_fixed(finding.gain_eth),
        "cost_eth": fmt_fixed(finding.cost_eth),
        "profit_eth": fmt_fixed(finding.profit_eth),
        "unpriced": finding.unpriced,
        "flash_loans": [_flashloan_json(f) for f in finding.flash_loans],
    }


def liquidation_to_json(finding, chain: str, timestamp: int, extractor=None) -> dict:
    return {
        "type": "liquidation",
        "chain": chain,
        "tx_hash": to_hex(finding.tx_hash),
        "block": finding.actions[0].position[0],
        "timestamp": timestamp,
        "extractor": to_hex(extractor) if extractor else None,
        "actions": [{
            "protocol": a.protocol,
            "liquidator": to_hex(a.liquidator),
            "borrower": to_hex(a.borrower),
            "debt_token": to_hex(a.debt_token),
            "debt_amount": str(a.debt_amount),
            "collateral_token": to_hex(a.collateral_token) if a.collateral_token else None,
            "collateral_amount": (str(a.collateral_amount)
                                  if a.collateral_amount is not None else None),
        } for a in finding.actions],
        "profit_eth": fmt_fixed(finding.profit_eth),
        "unpriced": finding.unpriced,
        "unredeemed": finding.unredeemed,
        "flash_loans": [_flashloan_json(f) for f in finding.flash_loans],
    }


def sandwich_to_json(finding, chain: str, timestamp: int) -> dict:
    return {
        "type": "sandwich",
        "chain": chain,
        "tx_hash": to_hex(finding.front_tx),
        "block": finding.window[0],
        "timestamp": timestamp,
        "front_tx": to_hex(finding.front_tx),
        "back_tx": to_hex(finding.back_tx),
        "victim_txs": [to_hex(v) for v in finding.victim_txs],
        "token": to_hex(finding.token),
        "attacker": to_hex(finding.attacker),
        "window": list(finding.window),
    }


def write_findings(findings_json: Sequence[dict], path) -> None:
    ordered = sorted(findings_json,
                     key=lambda f: (f["block"], f["tx_hash"], f.get("type", "")))
    with open(path, "w", encoding="utf-8") as fh:
        for obj in ordered:
            fh.write(json.dumps(obj, separators=(",", ":"), sort_keys=True) + "\n")


def read_findings(path) -> list:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                out.append(json.loads(raw))
    return out


# --- summary CSV tables ---

def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def emit_report(findings: Sequence[dict], out_dir, eth_usd=None) -> dict:
    """Write the summary CSVs for a findings list; returns paths written.

    ``eth_usd`` optionally maps unix day -> Fraction dollar price to add a
    USD column to profit statistics.
    """
    import os
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    # monthly counts per type (UTC month of block timestamp)
    monthly: dict = {}
    for f in findings:
        monthly[(month_of(f["timestamp"]), f["type"], f["chain"])] = \
            monthly.get((month_of(f["timestamp"]), f["type"], f["chain"]), 0) + 1
    paths["monthly_counts"] = f"{out_dir}/monthly_counts.csv"
    _write_csv(paths["monthly_counts"], ["month", "type", "chain", "count"],
               [[m, t, c, n] for (m, t, c), n in sorted(monthly.items())])

    # profit statistics per chain and type
    rows = []
    groups: dict = {}
    for f in findings:
        profit = f.get("profit_eth")
        if profit is None:
            continue
        groups.setdefault((f["chain"], f["type"]), []).append(
            (Fraction(profit), f["timestamp"]))
    for (chain, typ), entries in sorted(groups.items()):
        stats = profit_stats([e[0] for e in entries])
        row = [chain, typ, len(entries)]
        for key in ("total", "max", "p90", "mean", "median", "min"):
            row.append(fmt_fixed(stats[key]))
        if eth_usd is not None:
            usd = []
            for value, ts in entries:
                price = eth_usd(ts // 86400)
                if price is not None:
                    usd.append(value * price)
            row.append(fmt_fixed(profit_stats(usd)["total"] if usd else None, 2))
        rows.append(row)
    header = ["chain", "type", "count", "total_eth", "max_eth", "p90_eth",
              "mean_eth", "median_eth", "min_eth"]
    if eth_usd is not None:
        header.append("total_usd")
    paths["profit_stats"] = f"{out_dir}/profit_stats.csv"
    _write_csv(paths["profit_stats"], header, rows)

    # flash loan provider shares per finding type
    shares: dict = {}
    for f in findings:
        for fl in f.get("flash_loans", []):
            key = (f["chain"], f["type"], fl["provider"])
            shares[key] = shares.get(key, 0) + 1
    paths["flash_loan_shares"] = f"{out_dir}/flash_loan_shares.csv"
    _write_csv(paths["flash_loan_shares"], ["chain", "type", "provider", "count"],
               [[c, t, p, n] for (c, t, p), n in sorted(shares.items())])

    return paths


def write_distance_cdf(cdf, path) -> None:
    _write_csv(path, ["distance", "cumulative_fraction"],
               [[d, fmt_fixed(frac, 6)] for d, frac in cdf])


def write_delay_stats(overall, monthly, path) -> None:
    rows = [["all", overall.count, overall.min, fmt_fixed(overall.mean, 1),
             fmt_fixed(overall.median, 1), overall.max]]
    for month, stats in monthly.items():
        rows.append([month, stats.count, stats.min, fmt_fixed(stats.mean, 1),
                     fmt_fixed(stats.median, 1), stats.max])
    _write_csv(path, ["period", "count", "min_s", "mean_s", "median_s", "max_s"], rows)


def write_attack_table(table, tiers, path) -> None:
    """CSV mirroring the strategy x capital-tier profitability layout."""
    rows = []
    for strategy in sorted(table):
        for tier in tiers:
            cell = table[strategy][tier]
            rows.append([
                strategy,
                "inf" if tier is None else str(tier),
                cell["count"],
                fmt_fixed(cell["total"], 2),
                fmt_fixed(cell["max"], 2),
                fmt_fixed(cell["mean"], 2),
                fmt_fixed(cell["median"], 2),
                fmt_fixed(cell["min"], 2),
            ])
    _write_csv(path, ["strategy", "capital_usd", "profitable_count", "total_usd",
                      "max_usd", "mean_usd", "median_usd", "min_usd"], rows)


def write_bytecode_clusters(clusters, path) -> None:
    rows = []
    for c in clusters:
        rows.append([
            "0x" + c.digest.hex(),
            c.size,
            ";".join(c.chains),
            ";".join(f"{chain.name}:0x{address.hex()}" for chain, address in c.members),
        ])
    _write_csv(path, ["digest", "size", "chains", "members"], rows)
