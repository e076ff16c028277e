"""Command-line interface.

Subcommands: estimate, sensitivity, rho, attgt, simulate, verify. Single
estimates are printed as JSON on stdout; curves and tables are CSV. When
``--output`` names a file, the primary output is written there byte-for-byte
reproducibly and a run manifest (which carries the timestamp) is written next
to it as ``<output>.manifest.json``.

Exit codes: 0 success, 1 usage, 2 schema, 3 estimation/simulation,
4 singular design, 5 scenario-bank failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import (
    DidselError,
    SchemaError,
    SingularityError,
)
from .estimators import (
    att_at_rho,
    did_2x2,
    estimate_rho,
    identified_set,
    reg_adjusted_did,
    sensitivity_curve,
)
from .panel import ColumnSchema, load_panel_csv
from .regression import DesignSpec
from .scenarios import BANK_SEED, SCENARIOS, run_scenario
from .simulate import config_from_mapping, simulate_panel
from .staggered import att_gt_table

EXIT_USAGE = 1
EXIT_SCHEMA = 2
EXIT_ESTIMATION = 3
EXIT_SINGULAR = 4
EXIT_VERIFY_FAILED = 5


class UsageError(Exception):
    """Bad flag values detected after argparse (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunManifest:
    """Provenance record accompanying every file output."""

    command: str
    options: dict
    input_sha256: str
    seed: int
    version: str
    timestamp: str


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _manifest(args, input_path=None) -> RunManifest:
    options = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func",) and not callable(v)
    }
    return RunManifest(
        command=args.command,
        options=options,
        input_sha256=_sha256(input_path) if input_path else "",
        seed=getattr(args, "seed", 0),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def _emit(text: str, args, manifest: RunManifest):
    """Write the primary output to --output (plus manifest) or stdout."""
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
        with open(f"{args.output}.manifest.json", "w") as f:
            json.dump(asdict(manifest), f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        sys.stdout.write(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _schema(args) -> ColumnSchema:
    return ColumnSchema(id=args.id_col, period=args.period_col,
                        outcome=args.y_col, group=args.group_col)


def _load(args):
    return load_panel_csv(args.data, _schema(args))


def _design(args) -> DesignSpec | None:
    if args.design is None:
        return None
    return DesignSpec.parse(args.design)


def _estimate_payload(est, dataset, args) -> dict:
    g = dataset.group_mask(1.0)
    return {
        "estimate": est.point,
        "se": est.se,
        "ci": list(est.ci),
        "n_treated": int(g.sum()),
        "n_control": int((~g).sum()),
        "design": args.design,
        "pre": args.pre,
        "post": args.post,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_estimate(args) -> int:
    dataset = _load(args)
    spec = _design(args)
    if spec is None:
        est = did_2x2(dataset, args.pre, args.post)
    else:
        est = reg_adjusted_did(dataset, args.pre, args.post, spec)
    _emit(_json_text(_estimate_payload(est, dataset, args)), args,
          _manifest(args, args.data))
    return 0


def _parse_grid(text: str):
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--rho-grid expects lo:hi:step, got {text!r}")
    if step <= 0 or hi < lo:
        raise UsageError(f"bad --rho-grid {text!r}: need lo <= hi and step > 0")
    n = int(round((hi - lo) / step))
    return np.linspace(lo, lo + n * step, n + 1)


def cmd_sensitivity(args) -> int:
    dataset = _load(args)
    spec = _design(args)
    summary = {"design": args.design, "pre": args.pre, "post": args.post}

    did = att_at_rho(dataset, args.pre, args.post, 1.0, spec)
    summary["did"] = {"estimate": did.point, "se": did.se, "ci": list(did.ci)}

    if args.rho_benchmark:
        parts = args.rho_benchmark.split(",")
        if len(parts) != 3:
            raise UsageError("--rho-benchmark expects from,to,k")
        from_p, to_p, k = int(parts[0]), int(parts[1]), int(parts[2])
        rho = estimate_rho(dataset, from_p, to_p, k, spec)
        summary["rho_benchmark"] = {
            "from": from_p, "to": to_p, "k": k,
            "per_step": rho.per_step, "adjusted": rho.adjusted,
        }

    grid = None
    if args.rho_bounds:
        try:
            lo, hi = (float(x) for x in args.rho_bounds.split(","))
        except ValueError:
            raise UsageError(f"--rho-bounds expects lo,hi, got {args.rho_bounds!r}")
        if lo > hi:
            raise UsageError(f"--rho-bounds reversed: {lo} > {hi}")
        ids = identified_set(dataset, args.pre, args.post, lo, hi, spec)
        summary["identified_set"] = {
            "lo": ids.lo, "hi": ids.hi, "rho_bounds": list(ids.rho_bounds),
        }
        grid = np.linspace(lo, hi, 101)
    if args.rho_grid:
        grid = _parse_grid(args.rho_grid)

    if grid is not None:
        curve = sensitivity_curve(dataset, args.pre, args.post, grid, spec)
        summary["robust_interval"] = list(curve.robust_interval())
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rho", "att", "se", "ci_lo", "ci_hi"])
        for i in range(grid.size):
            writer.writerow([
                f"{curve.grid[i]:.10g}", f"{curve.att[i]:.10g}",
                f"{curve.se[i]:.10g}", f"{curve.ci_lo[i]:.10g}",
                f"{curve.ci_hi[i]:.10g}",
            ])
        _emit(buf.getvalue(), args, _manifest(args, args.data))

    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_rho(args) -> int:
    dataset = _load(args)
    rho = estimate_rho(dataset, args.from_period, args.to_period, args.k,
                       _design(args))
    _emit(_json_text({
        "per_step": rho.per_step,
        "horizon": rho.horizon,
        "adjusted": rho.adjusted,
        "design": args.design,
        "from": args.from_period,
        "to": args.to_period,
    }), args, _manifest(args, args.data))
    return 0


def cmd_attgt(args) -> int:
    dataset = _load(args)
    table = att_gt_table(dataset)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["g", "t", "estimate", "se", "is_pretreatment"])
    for row in table.to_rows():
        writer.writerow([
            row["g"], row["t"], f"{row['estimate']:.10g}",
            f"{row['se']:.10g}", str(row["is_pretreatment"]).lower(),
        ])
    _emit(buf.getvalue(), args, _manifest(args, args.data))
    return 0


def cmd_simulate(args) -> int:
    with open(args.config, "rb") as f:
        mapping = tomllib.load(f)
    if args.n is not None:
        mapping["n"] = args.n
    config = config_from_mapping(mapping)
    latent = simulate_panel(config, args.seed)
    buf = io.StringIO()
    latent.dataset.to_frame(_schema(args)).to_csv(buf, index=False)
    _emit(buf.getvalue(), args, _manifest(args, args.config))
    json.dump({
        "n": latent.dataset.n_units,
        "n_periods": len(latent.dataset.periods),
        "treated_share": float(latent.group.mean()),
        "true_att": latent.true_att,
        "seed": args.seed,
    }, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_verify(args) -> int:
    if args.reps is not None and args.reps < 2:
        raise UsageError("--reps must be at least 2")
    ids = [args.scenario] if args.scenario else list(SCENARIOS)
    lines = [f"{'scenario':<18} {'gap':>10} {'mcse':>8} {'expected':<9} verdict"]
    all_pass = True
    for sid in ids:
        v = run_scenario(sid, n=args.n, reps=args.reps, seed=args.seed)
        all_pass &= v.passed
        lines.append(
            f"{v.scenario:<18} {v.mean_gap:>+10.4f} {v.mcse:>8.4f} "
            f"{v.expected:<9} {'pass' if v.passed else 'FAIL'}"
        )
    _emit("\n".join(lines) + "\n", args, _manifest(args))
    return 0 if all_pass else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p, data=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", default=None,
                   help="write the primary output (and a manifest) to this file")
    if data:
        p.add_argument("data", help="long-form panel CSV")
        p.add_argument("--id-col", default="id")
        p.add_argument("--period-col", default="year")
        p.add_argument("--y-col", default="re")
        p.add_argument("--group-col", default="treat")


def build_parser() -> _Parser:
    parser = _Parser(prog="didsel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="2x2 or regression-adjusted DiD")
    _add_common(p)
    p.add_argument("--pre", type=int, required=True)
    p.add_argument("--post", type=int, required=True)
    p.add_argument("--design", default=None,
                   help='comma list of terms, e.g. "1,age,age^2"')
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sensitivity",
                       help="ATT curve over the persistence parameter")
    _add_common(p)
    p.add_argument("--pre", type=int, required=True)
    p.add_argument("--post", type=int, required=True)
    p.add_argument("--design", default=None)
    p.add_argument("--rho-grid", default=None, metavar="LO:HI:STEP")
    p.add_argument("--rho-bounds", default=None, metavar="LO,HI")
    p.add_argument("--rho-benchmark", default=None, metavar="FROM,TO,K")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("rho", help="pre-treatment outcome persistence")
    _add_common(p)
    p.add_argument("--from", dest="from_period", type=int, required=True)
    p.add_argument("--to", dest="to_period", type=int, required=True)
    p.add_argument("--k", type=int, required=True,
                   help="periodicity horizon; adjusted = per_step^k")
    p.add_argument("--design", default=None)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("attgt", help="staggered group-time effects")
    _add_common(p)
    p.set_defaults(func=cmd_attgt)

    p = sub.add_parser("simulate", help="draw a panel from a TOML config")
    _add_common(p, data=False)
    p.add_argument("--config", required=True, help="TOML simulation config")
    p.add_argument("--n", type=int, default=None, help="override config n")
    p.add_argument("--id-col", default="id")
    p.add_argument("--period-col", default="year")
    p.add_argument("--y-col", default="re")
    p.add_argument("--group-col", default="treat")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the scenario bank")
    _add_common(p, data=False)
    p.set_defaults(seed=BANK_SEED)
    p.add_argument("--scenario", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"didsel: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as e:
        print(f"didsel: schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except SingularityError as e:
        print(f"didsel: singular design: {e}", file=sys.stderr)
        return EXIT_SINGULAR
    except (DidselError, ValueError) as e:
        print(f"didsel: {e}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as e:
        print(f"didsel: {e}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
