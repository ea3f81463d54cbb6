"""Random-game sweeps, per-game records and the summary tables built from them."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
from scipy import stats

from .ess import (
    PURE_PASS_PATHS,
    CertificatePath,
    DegeneracyReport,
    EssRun,
    compute_all_ess,
)
from .game import ParseError, SolverConfig, SymmetricGame, derive_seed, random_game, save_game

RUNTIME_COLUMNS = ["K", "mean_total", "ci_total", "median_total", "mean_first", "ci_first", "median_first"]
BREAKDOWN_COLUMNS = ["TotalSNE", "StrictSNE", "PurePass", "MixedPass", "TotalESS"]


def format_strategy(probs, digits: int = 4) -> str:
    return "(" + ",".join(f"{v:.{digits}f}" for v in probs) + ")"


def _ess_digits(probs) -> int:
    # mixed ESS get the long form so they can be compared against reported values
    return 4 if np.count_nonzero(np.asarray(probs) > 0) == 1 else 7


def game_record(run: EssRun, degeneracy: DegeneracyReport | None = None, **extra) -> dict:
    """JSON-ready summary of one run; timing lives under ``total_time``/``time_to_first``."""
    certs = []
    for c in run.certificates:
        certs.append(
            {
                "support": list(c.support.actions),
                "probs": c.strategy.probs.tolist(),
                "verdict": c.verdict.value,
                "path": c.path.value,
                "invader": c.invader,
                "margin": c.margin,
                "br_set": list(c.br_set.actions),
            }
        )
    rec = dict(extra)
    rec.update(
        {
            "n_sne": len(run.sne),
            "certificates": certs,
            "ess": [c["probs"] for c in certs if c["verdict"] == "ESS"],
            "unresolved": [list(T.actions) for T in run.unresolved],
            "complete": run.complete,
            "stopped_early": run.stopped_early,
        }
    )
    if degeneracy is not None:
        rec["degenerate"] = degeneracy.degenerate
        rec["witnesses"] = [{"support": list(T.actions), "d_star": d} for T, d in degeneracy.witnesses]
    rec["total_time"] = run.total_time
    rec["time_to_first"] = run.time_to_first
    return rec


def _mean_ci(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return 0.0, 0.0, 0.0
    half = 0.0
    if len(v) > 1:
        half = float(stats.t.ppf(0.975, len(v) - 1) * v.std(ddof=1) / np.sqrt(len(v)))
    return float(v.mean()), half, float(np.median(v))


def aggregate(records: list[dict], K: int) -> dict:
    """Runtime statistics, ESS-count histogram, support sizes and screen breakdown."""
    mean_t, ci_t, med_t = _mean_ci([r["total_time"] for r in records])
    mean_f, ci_f, med_f = _mean_ci([r["time_to_first"] for r in records])
    counts = [len(r["ess"]) for r in records]
    hist = [0] * (max(counts, default=0) + 1)
    for c in counts:
        hist[c] += 1
    sizes = [0] * K
    for r in records:
        for probs in r["ess"]:
            sizes[int(np.count_nonzero(np.asarray(probs) > 0)) - 1] += 1
    paths = [c["path"] for r in records for c in r["certificates"]]
    pure_pass = {p.value for p in PURE_PASS_PATHS}
    strict = paths.count(CertificatePath.STRICT_SHORTCUT.value)
    mixed = paths.count(CertificatePath.MIXED_PASS.value)
    return {
        "runtime": {
            "K": K,
            "mean_total": mean_t,
            "ci_total": ci_t,
            "median_total": med_t,
            "mean_first": mean_f,
            "ci_first": ci_f,
            "median_first": med_f,
        },
        "ess_histogram": hist,
        "support_sizes": sizes,
        "breakdown": {
            "TotalSNE": sum(r["n_sne"] for r in records),
            "StrictSNE": strict,
            "PurePass": sum(p in pure_pass for p in paths),
            "MixedPass": mixed,
            "TotalESS": sum(counts),
        },
        "unresolved_games": sum(not r["complete"] for r in records),
    }


def run_sweep(
    K: int,
    count: int,
    seed: int,
    config: SolverConfig | None = None,
    *,
    n: int = 3,
    threads: int = 1,
    save_games: str | Path | None = None,
    progress=None,
) -> dict:
    """Solve ``count`` random games; game ``i`` uses ``derive_seed(seed, i)``."""
    if K < 2 or count < 1:
        raise ValueError("need K >= 2 and count >= 1")
    config = config or SolverConfig()
    records = []
    for i in range(count):
        game_seed = derive_seed(seed, i)
        game = random_game(n, K, game_seed)
        if save_games is not None:
            Path(save_games).mkdir(parents=True, exist_ok=True)
            save_game(game, Path(save_games) / f"game_{i:04d}.json")
        run = compute_all_ess(game, config, threads=threads)
        records.append(game_record(run, index=i, seed=game_seed))
        if progress is not None:
            progress(i, records[-1])
    return {
        "kind": "sweep",
        "n": n,
        "K": K,
        "count": count,
        "master_seed": seed,
        "config": asdict(config),
        "games": records,
        "aggregates": aggregate(records, K),
    }


# ---------------------------------------------------------------------------
# rendering


def load_results(path) -> dict:
    text = Path(path).read_text()
    if not text.strip():
        raise ParseError(f"{path}: results file is empty")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("kind") != "sweep" or "games" not in doc:
        raise ParseError(f"{path}: not a sweep results document")
    return doc


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _text_table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def report_tables(docs: list[dict]) -> dict[str, tuple[list, list]]:
    """Tables shaped like the runtime, histogram, support-size and breakdown summaries."""
    docs = sorted(docs, key=lambda d: d["K"])
    runtime_rows = []
    for d in docs:
        rt = d["aggregates"]["runtime"]
        runtime_rows.append([d["K"]] + [f"{rt[c]:.4f}" for c in RUNTIME_COLUMNS[1:]])
    width = max(len(d["aggregates"]["ess_histogram"]) for d in docs)
    hist_rows = [[d["K"]] + d["aggregates"]["ess_histogram"] + [0] * (width - len(d["aggregates"]["ess_histogram"])) for d in docs]
    size_width = max(d["K"] for d in docs)
    size_rows = [[d["K"]] + d["aggregates"]["support_sizes"] + [0] * (size_width - d["K"]) for d in docs]
    breakdown_rows = [[d["K"]] + [d["aggregates"]["breakdown"][c] for c in BREAKDOWN_COLUMNS] for d in docs]
    return {
        "runtime": (RUNTIME_COLUMNS, runtime_rows),
        "ess_histogram": (["K"] + [str(i) for i in range(width)], hist_rows),
        "support_sizes": (["K"] + [f"s={s}" for s in range(1, size_width + 1)], size_rows),
        "breakdown": (["K"] + BREAKDOWN_COLUMNS, breakdown_rows),
    }


def render_report(docs: list[dict], fmt: str = "table") -> str:
    tables = report_tables(docs)
    if fmt == "json":
        return json.dumps({k: [dict(zip(h, r)) for r in rows] for k, (h, rows) in tables.items()}, indent=1) + "\n"
    parts = []
    for name, (header, rows) in tables.items():
        if fmt == "csv":
            parts.append(f"# {name}\n" + _csv(header, rows))
        else:
            parts.append(f"== {name}\n" + _text_table(header, rows))
    return "\n".join(parts)


def render_game(record: dict, game: SymmetricGame, fmt: str = "table") -> str:
    """Per-game report; everything before the ``time_`` lines is deterministic."""
    if fmt == "json":
        doc = {"game": game.name, "n": game.n, "K": game.K, **record}
        return json.dumps(doc, indent=1) + "\n"
    certs = record["certificates"]
    if fmt == "csv":
        header = ["support", "probs", "verdict", "path", "margin", "br_set"]
        rows = []
        for c in certs:
            rows.append(
                [
                    " ".join(map(str, c["support"])),
                    format_strategy(c["probs"], 7),
                    c["verdict"],
                    _path_label(c),
                    "" if c["margin"] is None else f"{c['margin']:.7g}",
                    " ".join(map(str, c["br_set"])),
                ]
            )
        return _csv(header, rows)
    sne = " ".join(format_strategy(c["probs"]) for c in certs) or "none"
    ess = " ".join(format_strategy(p, _ess_digits(p)) for p in record["ess"]) or "none"
    lines = [
        f"game: {game.name or '-'} (n={game.n}, K={game.K})",
        f"SNE: {sne}; ESS: {ess}",
        "certificates:",
    ]
    for c in certs:
        margin = "" if c["margin"] is None else f"  margin={c['margin']:.3e}"
        support = "{" + ",".join(map(str, c["support"])) + "}"
        br = "{" + ",".join(map(str, c["br_set"])) + "}"
        lines.append(
            f"  {support:<10} {format_strategy(c['probs'], 7)}  {c['verdict']:<7} {_path_label(c)}  BR={br}{margin}"
        )
    if record["unresolved"]:
        lines.append("unresolved: " + " ".join("{" + ",".join(map(str, T)) + "}" for T in record["unresolved"]))
    if record.get("stopped_early"):
        lines.append("stopped at first ESS")
    if "degenerate" in record:
        lines.append(f"degenerate: {str(record['degenerate']).lower()}")
        for w in record["witnesses"]:
            lines.append("  witness {" + ",".join(map(str, w["support"])) + f"}}  D*={w['d_star']:.6g}")
    lines.append(f"time_total: {record['total_time']:.4f}s")
    lines.append(f"time_first: {record['time_to_first']:.4f}s")
    return "\n".join(lines) + "\n"


def _path_label(c: dict) -> str:
    return f"PURE_INVADED({c['invader']})" if c["path"] == "PURE_INVADED" else c["path"]
