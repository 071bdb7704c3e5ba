"""Command-line front end: ``nicf expand|certify|decay|mixing|levy``.

Every JSON document carries ``schema_version`` and the resolved configuration.
Floats are written with 17 significant digits.  Exit codes: 0 success,
1 a certified bound failed, 2 invalid input.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import warnings
from typing import Any

import click

from .maps import AdmissibilityError, DomainError, MapKind, expand, reconstruct
from .montecarlo import SEED_ENV, default_seed

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_CERT_FAIL, EXIT_INVALID = 0, 1, 2


# --------------------------------------------------------------------------
# output

def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if hasattr(obj, "item") and not isinstance(obj, (list, tuple, dict)):
        return to_json(obj.item(), indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(ctx: click.Context, text: str) -> None:
    path = ctx.params.get("output")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _document(ctx: click.Context, command: str, result: Any) -> str:
    config = {k: v for k, v in sorted(ctx.params.items()) if k != "output"}
    return to_json({"schema_version": SCHEMA_VERSION, "command": command,
                    "config": config, "result": result})


def _invalid(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_INVALID)


# --------------------------------------------------------------------------
# parsing helpers

def parse_intervals(text: str) -> list[tuple[float, float]]:
    """``"a,b;c,d"`` -> [(a, b), (c, d)]."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = [b.strip() for b in part.split(",")]
        if len(bits) != 2:
            raise ValueError(f"interval {part!r} must be 'lo,hi'")
        lo, hi = float(bits[0]), float(bits[1])
        if not lo < hi:
            raise ValueError(f"interval {part!r} must have lo < hi")
        out.append((lo, hi))
    if not out:
        raise ValueError("empty interval list")
    return out


def parse_word(text: str, kind: MapKind) -> list:
    """``"2,+1;3,-1"`` for signed digits, ``"3;-2"`` for the odd map."""
    digits = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = [int(b) for b in part.split(",")]
        if kind is MapKind.ODD:
            if len(bits) != 1:
                raise ValueError(f"odd-map digit {part!r} must be one signed integer")
            digits.append(bits[0])
        else:
            if len(bits) != 2:
                raise ValueError(f"digit {part!r} must be 'a,e'")
            digits.append(tuple(bits))
    if not digits:
        raise ValueError("empty digit word")
    return digits


def parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def read_config(path: str) -> dict:
    """key=value lines; '#' starts a comment; keys may use dashes."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.BadParameter(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


# --------------------------------------------------------------------------
# commands

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="key=value file of defaults; command-line flags take precedence.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Nearest-integer continued fraction maps, transfer operators and certificates."""
    if config_path:
        cfg = read_config(config_path)
        ctx.default_map = {name: _config_defaults(cmd, cfg) for name, cmd in main.commands.items()}


def _config_defaults(cmd: click.Command, cfg: dict) -> dict:
    """Map config keys (flag names or parameter names) onto ``cmd``'s parameters."""
    out = {}
    for param in cmd.params:
        names = {param.name} | {o.lstrip("-").replace("-", "_") for o in param.opts}
        for key in names & cfg.keys():
            out[param.name] = cfg[key]
    return out


_format_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                              default="json", show_default=True)
_output_option = click.option("--output", type=click.Path(dir_okay=False), default=None,
                              help="Write to this file instead of stdout.")


@main.command("expand")
@click.option("--kind", required=True, help="folded, odd, even, conjugate or hurwitz.")
@click.option("--x", "x", required=True, type=float)
@click.option("--n", "n", default=10, show_default=True, type=int)
@_format_option
@_output_option
@click.pass_context
def cmd_expand(ctx, kind, x, n, fmt, output):
    """Digits of the expansion of X."""
    try:
        mk = MapKind.parse(kind)
        if n < 1:
            raise ValueError("--n must be >= 1")
        seq = expand(mk, x, n)
    except (ValueError, DomainError) as exc:
        _invalid(str(exc))
    digits = [list(d) if isinstance(d, tuple) else d for d in seq.as_list()]
    value = reconstruct(seq) if len(seq) else 0.0
    if fmt == "csv":
        rows = [[i + 1] + (list(d) if isinstance(d, list) else [d]) for i, d in enumerate(digits)]
        header = ["i", "b"] if mk is MapKind.ODD else ["i", "a", "e"]
        _emit(ctx, to_csv(header, rows))
        return
    _emit(ctx, _document(ctx, "expand", {"kind": mk.value, "digits": digits,
                                         "terminated": seq.terminated,
                                         "reconstruction": value}))


@main.command("certify")
@click.option("--family", required=True, type=click.Choice(["folded", "conjugate"]))
@click.option("--spacing", default=1e-4, show_default=True, type=float)
@click.option("--report-components", is_flag=True, default=False)
@_format_option
@_output_option
@click.pass_context
def cmd_certify(ctx, family, spacing, report_components, fmt, output):
    """Certify the derivative-contraction constant of FAMILY on a grid."""
    from .bounds import conjugate_certificate, folded_certificate

    if not 0.0 < spacing <= 1e-2:
        _invalid("--spacing must lie in (0, 1e-2]")
    cert = folded_certificate(spacing) if family == "folded" else conjugate_certificate(spacing)
    keys = ["paper_constant", "certified_sup", "grid_spacing", "padding", "pass"]
    result = {k: cert[k] for k in keys}
    result["family"] = family
    if family == "conjugate":
        result.update({k: cert[k] for k in ("route", "lemma_route_sup", "lemma_route_pass")})
    if report_components:
        if family == "folded":
            result["components"] = cert["components"]
        else:
            result["lemma2"] = cert["lemma2"]
            result["lemma3"] = cert["lemma3"]
            result["discrepancy_note"] = cert["lemma3"]["discrepancy_note"]
    if fmt == "csv":
        _emit(ctx, to_csv(keys, [[cert[k] for k in keys]]))
    else:
        _emit(ctx, _document(ctx, "certify", result))
    sys.exit(EXIT_OK if cert["pass"] else EXIT_CERT_FAIL)


@main.command("decay")
@click.option("--kind", required=True, type=click.Choice(["folded", "conjugate", "even_conjugate"]))
@click.option("--n-max", default=20, show_default=True, type=int)
@click.option("--degree", default=64, show_default=True, type=int)
@click.option("--truncation", default=10_000, show_default=True, type=int)
@click.option("--direct", is_flag=True, default=False,
              help="Iterate gamma_n itself instead of its centred part.")
@_format_option
@_output_option
@click.pass_context
def cmd_decay(ctx, kind, n_max, degree, truncation, direct, fmt, output):
    """Sup-norm decay of gamma_n = U^n H and its fitted geometric rate."""
    from .gkl import gkl_iterate

    if n_max < 2:
        _invalid("--n-max must be >= 2")
    if not 8 <= degree <= 1024:
        _invalid("--degree must lie in [8, 1024]")
    if truncation < 2:
        _invalid("--truncation must be >= 2")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = gkl_iterate(kind, n_max, degree, truncation, centred=not direct)
    if fmt == "csv":
        rows = [[n, rep.errors[n], rep.ratios[n - 1]] for n in range(1, n_max + 1)]
        _emit(ctx, to_csv(["n", "error", "ratio"], rows))
    else:
        _emit(ctx, _document(ctx, "decay", rep.as_dict()))
    sys.exit(EXIT_OK if rep.verdict else EXIT_CERT_FAIL)


@main.command("mixing")
@click.option("--kind", required=True, type=click.Choice(["folded", "odd", "conjugate"]))
@click.option("--e", "e_text", required=True, help="Intervals 'lo,hi;lo,hi'.")
@click.option("--f", "f_text", required=True, help="Cylinder word, e.g. '2,+1;3,-1' or '3;-2'.")
@click.option("--n", "n_text", required=True, help="Comma separated list of n.")
@click.option("--degree", default=64, show_default=True, type=int)
@click.option("--truncation", default=10_000, show_default=True, type=int)
@click.option("--mc-samples", default=0, show_default=True, type=int,
              help="Also estimate the joint measure from this many orbits.")
@click.option("--seed", type=int, default=None, help=f"Defaults to ${SEED_ENV} or a fixed value.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv",
              show_default=True)
@_output_option
@click.pass_context
def cmd_mixing(ctx, kind, e_text, f_text, n_text, degree, truncation, mc_samples, seed, fmt, output):
    """Correlation gaps |mu(T^-n E cap F) - mu(E) mu(F)|."""
    from .cylinders import (
        CylinderSpec,
        conjugate_mixing,
        mixing_monte_carlo,
        mixing_sequence,
        odd_mixing,
    )
    from .measures import IntervalUnion, J_image

    if seed is None:
        seed = default_seed()
    ctx.params["seed"] = seed
    try:
        mk = MapKind.parse(kind)
        E = IntervalUnion(parse_intervals(e_text))
        F = CylinderSpec.of(mk, parse_word(f_text, mk))
        ns = parse_ints(n_text)
        if not ns or min(ns) < F.rank:
            raise ValueError(f"every n must be >= the cylinder rank {F.rank}")
        if mc_samples < 0:
            raise ValueError("--mc-samples must be >= 0")
        lo, hi = (-0.5, 0.5) if mk is not MapKind.FOLDED else (0.0, 0.5)
        if E.intervals[0][0] < lo or E.intervals[-1][1] > hi:
            raise ValueError(f"E must lie in [{lo}, {hi}]")
        if mk is MapKind.ODD and E != -E:
            raise ValueError("the odd-map reduction needs E symmetric about 0")
    except (ValueError, AdmissibilityError, DomainError) as exc:
        _invalid(str(exc))
    if mk is MapKind.FOLDED:
        results = mixing_sequence(E, F, ns, degree=degree, K=truncation)
    elif mk is MapKind.CONJUGATE:
        results = mixing_sequence(J_image(E), F, ns, degree=degree, K=truncation)
    else:
        half = E.intersect(0.0, 0.5)
        results = [odd_mixing(half, F, n, degree, truncation) for n in sorted(set(ns))]
    rows = []
    for r in results:
        row = {"n": r.n, "joint": r.joint, "product": r.product, "gap": r.gap,
               "deviation": r.deviation}
        if mc_samples:
            est = mixing_monte_carlo(F, E, r.n, mc_samples, seed)
            row.update({"mc_joint": est.p, "mc_stderr": est.stderr, "mc_z": est.z_score(r.joint)})
        rows.append(row)
    if fmt == "csv":
        header = list(rows[0].keys())
        _emit(ctx, to_csv(header, [[row[h] for h in header] for row in rows]))
    else:
        _emit(ctx, _document(ctx, "mixing", {"kind": mk.value, "rows": rows}))


@main.command("levy")
@click.option("--n-max", default=20, show_default=True, type=int)
@_format_option
@_output_option
@click.pass_context
def cmd_levy(ctx, n_max, fmt, output):
    """Target constants, certified sups and fitted rates side by side."""
    from .gkl import levy_comparison

    if n_max < 2:
        _invalid("--n-max must be >= 2")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = levy_comparison(n_max=n_max)
    if fmt == "csv":
        header = list(rows[0].keys())
        _emit(ctx, to_csv(header, [[r[h] for h in header] for r in rows]))
    else:
        _emit(ctx, _document(ctx, "levy", rows))


if __name__ == "__main__":  # pragma: no cover
    main()
