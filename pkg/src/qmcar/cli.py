"""Command-line entry point: ``qmcar <experiment> [options]``.

Exit codes: 0 success, 2 a rate or bound check failed, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path

from . import discrepancy, experiments

log = logging.getLogger("qmcar")

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


def parse_m_range(text: str) -> tuple[int, ...]:
    """``"9..14"`` -> (9, ..., 14); a single integer is a one-element range."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad m range {text!r}, expected A..B") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad m range {text!r}")
    return tuple(range(lo, hi + 1))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _sort_key(fields: list[str]):
    # experiment, sampler, m, seed (empty seed first)
    return (fields[0], fields[1], int(fields[2]), -1 if fields[9] == "" else int(fields[9]))


def result_csv(result: experiments.ExperimentResult) -> str:
    rows = [r.as_fields() for r in result.rows]
    if result.header == experiments.CSV_HEADER:
        rows.sort(key=_sort_key)
    else:
        rows.sort(key=lambda f: (int(f[0]), int(f[1])))
    return _csv_text(result.header, rows)


def slopes_text(result: experiments.ExperimentResult) -> str:
    cfg = result.config
    lines = [f"# experiment={cfg.experiment}",
             f"# m_range={cfg.m_range[0]}..{cfg.m_range[-1]}",
             f"# grid_m={cfg.grid_m}"]
    if cfg.experiment == "net-audit":
        lines += [f"# s_range={cfg.s_range[0]}..{cfg.s_range[-1]}", f"# seed={cfg.seed}", f"# trials={cfg.trials}"]
    else:
        lines.append(f"# seeds={cfg.seeds[0]}..{cfg.seeds[-1]}")
    lines.append("sampler,slope,intercept,r2")
    for name, fit in sorted(result.fits.items()):
        lines.append(f"{name},{float(fit.slope)!r},{float(fit.intercept)!r},{float(fit.r2)!r}")
    for name, ok in sorted(result.checks.items()):
        lines.append(f"# check {name}: {'pass' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


def plot_text(result: experiments.ExperimentResult) -> str:
    if result.header == experiments.AUDIT_HEADER:
        rows = [[str(r.s), str(r.m), repr(r.m * math.log(2)), repr(math.log(r.isotropic_estimate)),
                 repr(math.log(r.bound))] for r in sorted(result.rows, key=lambda r: (r.s, r.m))]
        return _csv_text(("s", "m", "log_M", "log_estimate", "log_bound"), rows)
    rows = []
    for sampler in sorted({r.sampler for r in result.rows}):
        for n, d in experiments.mean_curve(result.rows, sampler):
            rows.append([sampler, repr(math.log(n)), repr(math.log(d))])
    return _csv_text(("sampler", "log_N", "log_D"), rows)


def fit_csv(path: Path) -> dict:
    """Slopes per (experiment, sampler) from a results CSV; RAR rows are seed-averaged per m."""
    groups = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(experiments.CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            if rec["discrepancy_lower"] == "":
                continue
            groups[rec["experiment"], rec["sampler"]].append(experiments.Row(
                rec["experiment"], rec["sampler"], int(rec["m"]), int(rec["M"]), int(rec["N"]),
                float(rec["discrepancy_lower"]), float(rec["discrepancy_upper"]),
                float(rec["delta"]), int(rec["grid_m"]), None))
    out = {}
    for key, rows in sorted(groups.items()):
        curve = experiments.mean_curve(rows, key[1])
        if len(curve) >= 3:
            out[key] = discrepancy.fit_rate(curve)
    return out


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


class _Parser(argparse.ArgumentParser):
    # usage errors exit with 1; 2 is reserved for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmcar", description="Deterministic acceptance-rejection experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("example1", "example2", "example3", "net-audit"):
        sp = sub.add_parser(name)
        sp.add_argument("--m-range", type=parse_m_range, default=None, help="A..B inclusive")
        sp.add_argument("--grid", type=int, default=None, help="delta-cover grid exponent")
        sp.add_argument("--seed", type=int, default=0, help="first baseline seed")
        sp.add_argument("--runs", type=int, default=10, help="number of baseline seeds")
        sp.add_argument("--out", type=Path, default=None, help="CSV path (stdout if omitted)")
        sp.add_argument("--plot-data", action="store_true", help="also write <out>.plot.csv")
        if name == "net-audit":
            sp.add_argument("--trials", type=int, default=2000)
            sp.add_argument("--s-range", type=parse_m_range, default=(1, 2, 3, 4, 5))
    fp = sub.add_parser("fit")
    fp.add_argument("csv", type=Path)
    fp.add_argument("--out", type=Path, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "fit":
            fits = fit_csv(args.csv)
            lines = ["experiment,sampler,slope,intercept,r2"]
            lines += [f"{e},{s},{float(f.slope)!r},{float(f.intercept)!r},{float(f.r2)!r}" for (e, s), f in fits.items()]
            _write(args.out, "\n".join(lines) + "\n")
            return EXIT_OK
        kw = {}
        if args.command == "net-audit":
            kw = {"trials": args.trials, "s_range": args.s_range}
        cfg = experiments.ExperimentConfig(args.command, args.m_range or (), args.grid,
                                           args.seed, args.runs, **kw)
        result = experiments.run(cfg)
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        log.error("%s", exc)
        return EXIT_ERROR
    _write(args.out, result_csv(result))
    slopes = slopes_text(result)
    if args.out is None:
        sys.stderr.write(slopes)
    else:
        Path(f"{args.out}.slopes.txt").write_text(slopes)
        if args.plot_data:
            Path(f"{args.out}.plot.csv").write_text(plot_text(result))
    for name, ok in sorted(result.checks.items()):
        if not ok:
            log.warning("check failed: %s", name)
    return EXIT_OK if result.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
