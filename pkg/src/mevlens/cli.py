"""Command-line entry point and pipeline orchestration."""

from __future__ import annotations

import glob
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import click

from . import amm, bytecode, crosslayer, detectors, opportunity, reporting
from .chain_model import CHAINS, ETHEREUM, load_fixture, logs_in_range
from .errors import MevlensError

log = logging.getLogger("mevlens")


def _setup_logging():
    level = os.environ.get("MEVLENS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def common_options(fn):
    fn = click.option("--chain", "chain_name", default="ethereum",
                      type=click.Choice(sorted(CHAINS)), show_default=True)(fn)
    fn = click.option("--from-block", type=int, default=None)(fn)
    fn = click.option("--to-block", type=int, default=None)(fn)
    fn = click.option("--fixtures", "fixtures_dir", required=True,
                      type=click.Path(exists=True, file_okay=False))(fn)
    fn = click.option("--prices", "prices_file", type=click.Path(exists=True),
                      default=None)(fn)
    fn = click.option("--pools", "pools_file", type=click.Path(exists=True),
                      default=None)(fn)
    fn = click.option("--snapshots", "snapshots_file", type=click.Path(exists=True),
                      default=None)(fn)
    fn = click.option("--config", "config_file", type=click.Path(exists=True),
                      default=None)(fn)
    fn = click.option("--out", "out_dir", default="out",
                      type=click.Path(file_okay=False))(fn)
    fn = click.option("--window", type=int, default=100, show_default=True)(fn)
    fn = click.option("--horizon", type=int, default=100, show_default=True)(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True)(fn)
    return fn


class Ctx:
    """Lazy-loading bundle of the run inputs."""

    def __init__(self, **kw):
        self.__dict__.update(kw)
        self._dataset = None
        self._pools = None
        self._prices = None

    def dataset(self, chain_name=None):
        name = chain_name or self.chain_name
        path = os.path.join(self.fixtures_dir, f"{name}.jsonl")
        if not os.path.exists(path):
            raise click.UsageError(f"fixture not found: {path}")
        ds = load_fixture(path)
        if self.from_block is not None or self.to_block is not None:
            lo = self.from_block if self.from_block is not None else 0
            hi = self.to_block if self.to_block is not None else (1 << 62)
            ds.logs = logs_in_range(ds, lo, hi)
        return ds

    def pools(self):
        if self._pools is None and self.pools_file:
            self._pools = amm.load_pool_metadata(self.pools_file)
        return self._pools

    def prices(self):
        if self._prices is None and self.prices_file:
            self._prices = detectors.PriceProvider.from_csv(self.prices_file)
        return self._prices

    def ensure_out(self):
        os.makedirs(self.out_dir, exist_ok=True)
        return self.out_dir


@click.group()
def cli():
    """MEV detection and cross-layer sandwich simulation over recorded
    event-log fixtures."""
    _setup_logging()


@cli.group()
def detect():
    """Run one MEV detector over a chain fixture."""


def _block_shards(blocks, jobs):
    numbers = sorted({b.number for b in blocks})
    if not numbers or jobs <= 1:
        return [(numbers[0], numbers[-1])] if numbers else []
    chunk = max(1, (len(numbers) + jobs - 1) // jobs)
    shards = []
    for i in range(0, len(numbers), chunk):
        part = numbers[i:i + chunk]
        shards.append((part[0], part[-1]))
    return shards


def _detect_arb(ctx: Ctx):
    ds = ctx.dataset()
    pools = ctx.pools()

    def run_shard(bounds):
        lo, hi = bounds
        shard_logs = logs_in_range(ds, lo, hi)
        swaps_by_tx = {}
        for lg in shard_logs:
            try:
                swap = detectors.decode_swap(lg, pools)
            except Exception:
                continue
            if swap is not None:
                swaps_by_tx.setdefault(lg.tx_hash, []).append(swap)
        return detectors.detect_arbitrages(swaps_by_tx)

    shards = _block_shards(ds.blocks, ctx.jobs)
    if ctx.jobs > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
            results = list(pool.map(run_shard, shards))
        findings = [f for part in results for f in part]
    else:
        findings = run_shard(shards[0]) if shards else []

    findings.sort(key=lambda f: (f.cycle[0].position, f.tx_hash))

    prices = ctx.prices()
    tx_logs = detectors.group_logs_by_tx(ds.logs)
    out = []
    for f in findings:
        ts = ds.block_timestamp(f.cycle[0].position[0]) or 0
        tx = ds.tx(f.tx_hash)
        if prices is not None and tx is not None:
            f = detectors.arbitrage_profit(f, prices, tx, ts)
        f = detectors.attribute_flash_loans(f, tx_logs.get(f.tx_hash, []))
        out.append(reporting.arbitrage_to_json(
            f, ds.chain.name if ds.chain else ctx.chain_name, ts,
            tx.sender if tx else None))
    return out


def _detect_liq(ctx: Ctx):
    ds = ctx.dataset()
    prices = ctx.prices()
    tx_logs = detectors.group_logs_by_tx(ds.logs)
    out = []
    for f in detectors.detect_liquidations(ds.logs):
        ts = ds.block_timestamp(f.actions[0].position[0]) or 0
        tx = ds.tx(f.tx_hash)
        if prices is not None and tx is not None:
            f = detectors.liquidation_profit(f, prices, tx, ts)
        f = detectors.attribute_flash_loans(f, tx_logs.get(f.tx_hash, []))
        out.append(reporting.liquidation_to_json(
            f, ds.chain.name if ds.chain else ctx.chain_name, ts,
            tx.sender if tx else None))
    return out


def _detect_sandwich(ctx: Ctx):
    ds = ctx.dataset()
    transfers = detectors.extract_transfers(ds)
    findings = detectors.detect_sandwiches(transfers, ds.chain or ETHEREUM,
                                           window=ctx.window)
    out = []
    for f in findings:
        ts = ds.block_timestamp(f.window[0]) or 0
        out.append(reporting.sandwich_to_json(
            f, ds.chain.name if ds.chain else ctx.chain_name, ts))
    return out


def _write(ctx: Ctx, name, rows):
    ctx.ensure_out()
    path = os.path.join(ctx.out_dir, name)
    reporting.write_findings(rows, path)
    click.echo(f"{len(rows)} findings -> {path}")


@detect.command("arb")
@common_options
def detect_arb_cmd(**kw):
    ctx = Ctx(**kw)
    _write(ctx, "findings_arb.jsonl", _detect_arb(ctx))


@detect.command("liq")
@common_options
def detect_liq_cmd(**kw):
    ctx = Ctx(**kw)
    _write(ctx, "findings_liq.jsonl", _detect_liq(ctx))


@detect.command("sandwich")
@common_options
def detect_sandwich_cmd(**kw):
    ctx = Ctx(**kw)
    _write(ctx, "findings_sandwich.jsonl", _detect_sandwich(ctx))


@detect.command("flashloan")
@common_options
def detect_flashloan_cmd(**kw):
    ctx = Ctx(**kw)
    ds = ctx.dataset()
    rows = []
    for lg in ds.logs:
        try:
            loan = detectors.decode_flashloan(lg)
        except Exception:
            continue
        if loan is not None:
            ts = ds.block_timestamp(lg.block_number) or 0
            rows.append({
                "type": "flash_loan", "chain": ds.chain.name if ds.chain else ctx.chain_name,
                "tx_hash": reporting.to_hex(loan.tx_hash), "block": lg.block_number,
                "timestamp": ts, "provider": loan.provider,
                "token": reporting.to_hex(loan.token),
                "amount": str(loan.amount), "fee": str(loan.fee),
            })
    _write(ctx, "findings_flashloan.jsonl", rows)


@cli.command("decode")
@common_options
def decode_cmd(**kw):
    ctx = Ctx(**kw)
    ds = ctx.dataset()
    counts = {}
    for lg in ds.logs:
        entry = detectors.DEFAULT_REGISTRY.lookup(lg.topics[0])
        if entry is None:
            counts["unknown"] = counts.get("unknown", 0) + 1
            continue
        counts[entry.schema] = counts.get(entry.schema, 0) + 1
    for schema in sorted(counts):
        click.echo(f"{schema}: {counts[schema]}")


def _opportunities(ctx: Ctx, mev_type):
    ds = ctx.dataset()
    pools = ctx.pools()
    if ctx.snapshots_file is None:
        raise click.UsageError("--snapshots is required for opportunity search")
    provider = opportunity.StateProvider.from_jsonl(ctx.snapshots_file, pools)
    results = []
    if mev_type == "arb":
        swaps_by_tx = detectors.extract_swaps(ds, pools)
        for f in detectors.detect_arbitrages(swaps_by_tx):
            results.append((f, opportunity.find_arbitrage_opportunity(
                f, ds, provider, pools, horizon=ctx.horizon)))
    else:
        for f in detectors.detect_liquidations(ds.logs):
            results.append((f, opportunity.find_liquidation_opportunity(
                f, ds, provider, horizon=ctx.horizon)))
    return ds, results


@cli.command("opportunity")
@click.option("--type", "mev_type", type=click.Choice(["arb", "liq"]),
              default="arb", show_default=True)
@common_options
def opportunity_cmd(mev_type, **kw):
    ctx = Ctx(**kw)
    ds, results = _opportunities(ctx, mev_type)
    rows = []
    for f, r in results:
        block = (f.cycle[0].position[0] if mev_type == "arb"
                 else f.actions[0].position[0])
        rows.append({
            "type": f"opportunity_{mev_type}",
            "tx_hash": reporting.to_hex(f.tx_hash),
            "block": block,
            "timestamp": ds.block_timestamp(block) or 0,
            "status": r.status,
            "opportunity_tx": reporting.to_hex(r.opportunity_tx) if r.opportunity_tx else None,
            "block_distance": r.block_distance,
            "approximate": r.approximate,
        })
    _write(ctx, f"opportunities_{mev_type}.jsonl", rows)
    cdf = opportunity.block_distance_cdf([r for _, r in results], ctx.horizon)
    ctx.ensure_out()
    reporting.write_distance_cdf(cdf, os.path.join(ctx.out_dir, "distance_cdf.csv"))


@cli.command("compete")
@click.option("--type", "mev_type", type=click.Choice(["arb", "liq"]),
              default="arb", show_default=True)
@common_options
def compete_cmd(mev_type, **kw):
    ctx = Ctx(**kw)
    ds, results = _opportunities(ctx, mev_type)
    entries = []
    for f, r in results:
        tx = ds.tx(f.tx_hash)
        extractor = tx.sender if tx else b""
        entries.append((mev_type, r.opportunity_tx, extractor,
                        reporting.to_hex(f.tx_hash)))
    groups = opportunity.detect_competition(entries)
    rows = [{
        "type": "competition",
        "mev_type": g["type"],
        "tx_hash": reporting.to_hex(g["opportunity_tx"]),
        "block": 0,
        "timestamp": 0,
        "extractors": [reporting.to_hex(e) for e in g["extractors"]],
        "findings": g["findings"],
    } for g in groups]
    _write(ctx, f"competition_{mev_type}.jsonl", rows)


@cli.group("crosslayer")
def crosslayer_group():
    """Cross-layer victim inference, delay stats, attack simulation."""


def _infer(ctx: Ctx):
    l1 = ctx.dataset("ethereum")
    l2 = ctx.dataset(ctx.chain_name)
    return crosslayer.infer_victims(l1, l2, ctx.pools())


@crosslayer_group.command("infer")
@common_options
def crosslayer_infer_cmd(**kw):
    ctx = Ctx(**kw)
    candidates, links, diagnostics = _infer(ctx)
    rows = [{
        "type": "victim_candidate",
        "tx_hash": reporting.to_hex(c.link.l2_tx),
        "block": 0,
        "timestamp": c.link.l1_timestamp,
        "l1_tx": reporting.to_hex(c.link.l1_tx),
        "link_key": "0x" + c.link.link_key.hex(),
        "delay_s": c.link.delay_s,
        "pool": reporting.to_hex(c.pool),
        "token_in": reporting.to_hex(c.swap.token_in),
        "token_out": reporting.to_hex(c.swap.token_out),
        "amount_in": str(c.swap.amount_in),
    } for c in candidates]
    _write(ctx, "victims.jsonl", rows)
    click.echo(f"links: {len(links)}, unlinked L1: {len(diagnostics['unlinked_l1'])}, "
               f"unlinked L2: {len(diagnostics['unlinked_l2'])}")


@crosslayer_group.command("delay")
@common_options
def crosslayer_delay_cmd(**kw):
    ctx = Ctx(**kw)
    _, links, _ = _infer(ctx)
    overall, monthly, anomalies = crosslayer.delay_stats(links)
    ctx.ensure_out()
    path = os.path.join(ctx.out_dir, "delay_stats.csv")
    reporting.write_delay_stats(overall, monthly, path)
    click.echo(f"{overall.count} links, {len(anomalies)} anomalies -> {path}")


@crosslayer_group.command("simulate")
@common_options
def crosslayer_simulate_cmd(**kw):
    ctx = Ctx(**kw)
    candidates, _, _ = _infer(ctx)
    pools = ctx.pools()
    prices = ctx.prices()
    if ctx.snapshots_file is None:
        raise click.UsageError("--snapshots is required for attack simulation")
    provider = opportunity.StateProvider.from_jsonl(ctx.snapshots_file, pools)
    if ctx.config_file:
        costs, reaction, tiers = crosslayer.load_attack_config(ctx.config_file)
    else:
        costs = crosslayer.CostModel(Fraction(2, 1000), Fraction(1, 10000),
                                     Fraction(1, 1000))
        reaction = crosslayer.DEFAULT_REACTION_TIME_S
        tiers = crosslayer.DEFAULT_CAPITAL_TIERS_USD

    scenarios = []
    for c in candidates:
        state = provider.pool_state(c.pool, 1 << 62)
        if state is None:
            continue
        day = c.link.l1_timestamp // 86400
        token_price = prices.lookup(c.swap.token_in, day) if prices else Fraction(1)
        eth_usd = prices.eth_usd(day) if prices else Fraction(2000)
        if token_price is None or eth_usd is None:
            continue
        scenarios.append({"victim": c, "pool_state": state,
                          "token_in_price_eth": token_price, "eth_usd": eth_usd})
    table = crosslayer.capital_sweep(scenarios, costs, tiers, reaction)
    ctx.ensure_out()
    path = os.path.join(ctx.out_dir, "attack_tables.csv")
    reporting.write_attack_table(table, tiers, path)
    click.echo(f"{len(scenarios)} scenarios -> {path}")


@cli.group("bytecode")
def bytecode_group():
    """Bytecode normalization and clustering."""


@bytecode_group.command("cluster")
@click.option("--bytecode", "bytecode_file", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", default="out", type=click.Path(file_okay=False))
def bytecode_cluster_cmd(bytecode_file, out_dir):
    records = bytecode.load_bytecode_fixture(bytecode_file)
    clusters = bytecode.cluster(records)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "bytecode_clusters.csv")
    reporting.write_bytecode_clusters(clusters, path)
    click.echo(f"{len(clusters)} clusters -> {path}")


@cli.command("report")
@click.option("--out", "out_dir", default="out", type=click.Path(file_okay=False))
@click.option("--prices", "prices_file", type=click.Path(exists=True), default=None)
def report_cmd(out_dir, prices_file):
    """Summarize all findings_*.jsonl files in the output directory."""
    findings = []
    for path in sorted(glob.glob(os.path.join(out_dir, "findings_*.jsonl"))):
        findings.extend(reporting.read_findings(path))
    eth_usd = None
    if prices_file:
        provider = detectors.PriceProvider.from_csv(prices_file)
        eth_usd = provider.eth_usd
    paths = reporting.emit_report(findings, out_dir, eth_usd)
    for name in sorted(paths):
        click.echo(f"{name} -> {paths[name]}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except MevlensError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except AssertionError as exc:
        click.echo(f"internal invariant violation: {exc}", err=True)
        return 2
    except SystemExit as exc:
        code = exc.code or 0
        return 1 if code == 2 else int(code)


if __name__ == "__main__":
    sys.exit(main())
