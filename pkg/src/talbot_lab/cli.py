"""Command line entry point: exponent curves, verification suites and sweeps."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from . import evolution as ev
from . import slabs as sl
from . import verification as vf
from .exponents import (DomainError, ParamVector, ProblemDims, alpha_dims, all_breakpoints,
                        as_fraction, dilation_from_params, emit_curve)
from .guards import CostGuardError
from .optimizer import default_u1

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_COST = 0, 1, 2, 3
FORMATS = ("csv", "json", "svg")
VERIFY_TARGETS = ("all", *vf.SUITES)
SWEEP_COMPONENTS = ("slope", "dimfit", "omega")


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


def _parse_R(text: str) -> tuple[float, ...]:
    """Comma list of scales; ``2^k`` and ``2^a..2^b`` are accepted."""
    out = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if ".." in item:
            lo, hi = (_pow2_exponent(x) for x in item.split(".."))
            out.extend(2.0 ** k for k in range(lo, hi + 1))
        elif item.startswith("2^"):
            out.append(2.0 ** _pow2_exponent(item))
        else:
            out.append(float(item))
    if not out or any(R <= 1 for R in out):
        raise ConfigError(f"bad R list {text!r}")
    return tuple(out)


def _pow2_exponent(item: str) -> int:
    if not item.strip().startswith("2^"):
        raise ConfigError(f"range endpoints must look like 2^k, got {item!r}")
    return int(item.strip()[2:])


def _fraction_list(text: str) -> tuple[Fraction, ...]:
    return tuple(as_fraction(x.strip()) for x in text.split(",") if x.strip())


def _formats(text: str) -> tuple[str, ...]:
    picked = tuple(x.strip() for x in text.split(",") if x.strip())
    unknown = set(picked) - set(FORMATS)
    if unknown:
        raise ConfigError(f"unknown formats {sorted(unknown)}")
    return picked


@dataclass
class RunConfig:
    n: int = 15
    m: int | None = None
    alpha_min: Fraction | None = None
    alpha_max: Fraction | None = None
    step: Fraction = Fraction(1, 16)
    u1: Fraction | None = None
    u2: Fraction | None = None
    u3: Fraction | None = None
    sweep_u2: tuple[Fraction, ...] = ()
    R: tuple[float, ...] | None = None
    bump_c: float = 0.01
    seed: int = sl.MC_SEED
    out: str = "."
    format: tuple[str, ...] = ("csv", "json", "svg")

    def as_dict(self) -> dict:
        """Plain JSON-able view, with rationals as strings."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (tuple, list)):
                value = [_plain(v) for v in value]
            else:
                value = _plain(value)
            out[f.name] = value
        return out

    @property
    def scales(self) -> tuple[float, ...]:
        return self.R if self.R is not None else vf.DYADIC_RANGE

    def params(self, u2: Fraction | None = None) -> ParamVector:
        """Parameters at ``u2`` (or the configured one); a missing ``u1`` follows ``default_u1``."""
        u2 = self.u2 if u2 is None else u2
        if u2 is None or self.u3 is None:
            raise ConfigError("u2 and u3 are required here")
        u1 = self.u1 if self.u1 is not None else default_u1(u2)
        return ParamVector(u1, u2, self.u3)

    def dims(self) -> ProblemDims:
        if self.m is None:
            raise ConfigError("m is required here")
        return ProblemDims(self.n, self.m)


def _plain(value):
    if isinstance(value, Fraction):
        return str(value)
    return value


_PARSERS = {
    "n": int,
    "m": int,
    "alpha_min": as_fraction,
    "alpha_max": as_fraction,
    "step": as_fraction,
    "u1": as_fraction,
    "u2": as_fraction,
    "u3": as_fraction,
    "sweep_u2": _fraction_list,
    "R": _parse_R,
    "bump_c": float,
    "seed": lambda s: int(s, 0),
    "out": str,
    "format": _formats,
}


def _apply(config: RunConfig, key: str, raw: str) -> RunConfig:
    key = key.strip().replace("-", "_")
    if key not in _PARSERS:
        raise ConfigError(f"unknown key {key!r}")
    try:
        value = _PARSERS[key](raw.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return replace(config, **{key: value})


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    config = base or RunConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        config = _apply(config, key, raw)
    return config


# ---------------------------------------------------------------------------
# output helpers


def fmt_float(x: float) -> str:
    return f"{x:.17g}"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


CURVE_HEADER = ("alpha_num", "alpha_den", "s_num", "s_den", "branch", "winning_m")


def curve_csv(rows) -> str:
    return _csv_text(CURVE_HEADER, [
        (r.alpha.numerator, r.alpha.denominator, r.s.numerator, r.s.denominator, r.branch, r.winning_m)
        for r in rows])


def read_curve_csv(text: str) -> list[tuple[Fraction, Fraction, str, int]]:
    reader = csv.DictReader(io.StringIO(text))
    return [(Fraction(int(r["alpha_num"]), int(r["alpha_den"])),
             Fraction(int(r["s_num"]), int(r["s_den"])), r["branch"], int(r["winning_m"]))
            for r in reader]


def curve_svg(n: int, rows, breakpoints, width: int = 640, height: int = 400) -> str:
    """Line plot of the curve with breakpoints drawn as dots."""
    pad = 48
    xs = [float(r.alpha) for r in rows]
    ys = [float(r.s) for r in rows]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(x, y):
        return (pad + (x - x0) / (x1 - x0) * (width - 2 * pad),
                height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad))

    path = " ".join(f"{'M' if i == 0 else 'L'}{a:.2f},{b:.2f}"
                    for i, (a, b) in enumerate(px(x, y) for x, y in zip(xs, ys)))
    by_alpha = {r.alpha: r.s for r in rows}
    dots = "".join(
        '<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="#c0392b"><title>alpha={}</title></circle>'.format(
            *px(float(b), float(by_alpha[b])), b)
        for b in breakpoints if b in by_alpha)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">alpha</text>\n'
        f'<text x="14" y="{height / 2}" font-size="12">s</text>\n'
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:g}</text>\n'
        f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="end">{x1:g}</text>\n'
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>\n'
        f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>\n'
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">n = {n}</text>\n'
        f'<path d="{path}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>\n'
        f"{dots}\n</svg>\n"
    )


def report(command: str, config: RunConfig, checks, seconds: float) -> dict:
    return {
        "command": command,
        "config": config.as_dict(),
        "checks": [{"name": c.name, "status": c.status, "seconds": c.seconds,
                    "payload": {k: _plain(v) for k, v in c.payload.items()}} for c in checks],
        "seconds": seconds,
    }


def report_text(rep: dict) -> str:
    lines = [f"{rep['command']}  ({rep['seconds']:.1f} s)"]
    for c in rep["checks"]:
        lines.append(f"[{c['status'].upper()}] {c['name']}  ({c['seconds']:.1f} s)")
        lines.extend(f"    {k} = {v!r}" for k, v in c["payload"].items())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_exponents(config: RunConfig) -> int:
    n = config.n
    lo = config.alpha_min if config.alpha_min is not None else Fraction(n, 2)
    hi = config.alpha_max if config.alpha_max is not None else Fraction(n)
    rows = emit_curve(n, lo, hi, config.step)
    out = Path(config.out)
    stem = f"curve_n{n}"
    if "csv" in config.format:
        _write(out / f"{stem}.csv", curve_csv(rows))
    if "svg" in config.format:
        _write(out / f"{stem}.svg", curve_svg(n, rows, all_breakpoints(n)))
    if "json" in config.format:
        _write(out / f"{stem}.json", _json_text({
            "command": "exponents", "config": config.as_dict(),
            "rows": [{"alpha": str(r.alpha), "s": str(r.s), "branch": r.branch,
                      "winning_m": r.winning_m} for r in rows]}))
    print(f"n={n}: {len(rows)} rows over [{lo}, {hi}], wrote {', '.join(config.format) or 'nothing'} to {out}")
    return EXIT_OK


def cmd_verify(config: RunConfig, target: str) -> int:
    start = time.perf_counter()
    options = {"bump_c": config.bump_c, "seed": config.seed}
    if config.R is not None:
        options["Rs"] = config.R
    checks = vf.run_suite(target, **options)
    rep = report(f"verify {target}", config, checks, time.perf_counter() - start)
    sys.stdout.write(report_text(rep))
    if "json" in config.format:
        _write(Path(config.out) / f"verify_{target}.json", _json_text(rep))
    return EXIT_FAIL if any(c.failed for c in checks) else EXIT_OK


def input_hash(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _sweep_points(config: RunConfig):
    return [config.params(v) for v in config.sweep_u2 or (config.u2,)]


def _slope_rows(config, dims, u):
    fit = ev.slope_fit(dims, u, config.scales, ev.BumpSpec(c=config.bump_c))
    return [{"slope": fmt_float(fit.slope), "expected": str(fit.expected),
             "deviation": fmt_float(fit.deviation)}]


def _dimfit_rows(config, dims, u):
    fine = sl.dim_fit(dims, u, config.scales, "fine")
    coarse = sl.dim_fit(dims, u, config.scales, "coarse")
    a1, a2 = alpha_dims(dims, u.u2, u.u3)
    return [{"fitted_fine": fmt_float(fine.exponent), "fitted_coarse": fmt_float(coarse.exponent),
             "fitted_min": fmt_float(min(fine.exponent, coarse.exponent)),
             "alpha1": str(a1), "alpha2": str(a2), "predicted_min": str(min(a1, a2))}]


def _omega_rows(config, dims, u):
    a = dilation_from_params(dims, u)
    return [{"R": fmt_float(R), "omega": fmt_float(sl.omega_measure(dims, R, u, a).value)}
            for R in config.scales]


_SWEEPS = {
    "slope": (_slope_rows, ("slope", "expected", "deviation")),
    "dimfit": (_dimfit_rows, ("fitted_fine", "fitted_coarse", "fitted_min", "alpha1", "alpha2",
                              "predicted_min")),
    "omega": (_omega_rows, ("R", "omega")),
}


def cmd_sweep(config: RunConfig, component: str) -> int:
    """Cartesian sweep over u2; rows already on disk with a matching input hash are reused."""
    dims = config.dims()
    compute, columns = _SWEEPS[component]
    header = ("input_hash", "n", "m", "u1", "u2", "u3", *columns)
    path = Path(config.out) / f"sweep_{component}.csv"
    cached: dict[str, list[dict]] = {}
    if path.exists():
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if tuple(row) == header:
                    cached.setdefault(row["input_hash"], []).append(row)
    rows, fresh = [], 0
    for u in _sweep_points(config):
        inputs = {"component": component, "n": dims.n, "m": dims.m,
                  "u": [str(u.u1), str(u.u2), str(u.u3)], "R": list(config.scales),
                  "bump_c": config.bump_c, "seed": config.seed}
        key = input_hash(inputs)
        if key in cached:
            rows.extend(cached[key])
            continue
        fresh += 1
        lead = {"input_hash": key, "n": dims.n, "m": dims.m,
                "u1": str(u.u1), "u2": str(u.u2), "u3": str(u.u3)}
        rows.extend({**lead, **r} for r in compute(config, dims, u))
    _write(path, _csv_text(header, [[r[h] for h in header] for r in rows]))
    if "json" in config.format:
        _write(path.with_suffix(".json"), _json_text({
            "command": f"sweep {component}", "config": config.as_dict(), "rows": rows}))
    print(f"sweep {component}: {len(rows)} rows ({fresh} computed) -> {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file")
    p.add_argument("--n", type=str)
    p.add_argument("--m", type=str)
    p.add_argument("--alpha-min", type=str)
    p.add_argument("--alpha-max", type=str)
    p.add_argument("--step", type=str)
    p.add_argument("--u1", type=str)
    p.add_argument("--u2", type=str)
    p.add_argument("--u3", type=str)
    p.add_argument("--sweep-u2", type=str, help="comma list of u2 values")
    p.add_argument("--R", type=str, help="comma list, 2^k, or 2^a..2^b")
    p.add_argument("--bump-c", type=str)
    p.add_argument("--seed", type=str)
    p.add_argument("--out", type=str)
    p.add_argument("--format", type=str, help="comma list from csv,json,svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="talbot-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("exponents", help="emit the lower-bound curve as CSV, SVG and JSON")
    _add_common(p)
    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("target", choices=VERIFY_TARGETS)
    _add_common(p)
    p = sub.add_parser("sweep", help="parameter sweeps written to CSV")
    p.add_argument("component", choices=SWEEP_COMPONENTS)
    _add_common(p)
    return parser


_FLAG_KEYS = ("n", "m", "alpha_min", "alpha_max", "step", "u1", "u2", "u3", "sweep_u2", "R",
              "bump_c", "seed", "out", "format")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        config = parse_config_text(text, config)
    for key in _FLAG_KEYS:
        raw = getattr(args, key)
        if raw is not None:
            config = _apply(config, key, raw)
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = resolve_config(args)
        if args.command == "exponents":
            return cmd_exponents(config)
        if args.command == "verify":
            return cmd_verify(config, args.target)
        return cmd_sweep(config, args.component)
    except ValueError as exc:  # ConfigError and DomainError included
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CostGuardError as exc:
        print(f"cost guard: {exc}", file=sys.stderr)
        return EXIT_COST


if __name__ == "__main__":
    sys.exit(main())
