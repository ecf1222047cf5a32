"""Command-line front end.

Flags override a key=value config file, which overrides built-in defaults.
A JSON run manifest is also accepted as a config file, which replays its
resolved parameters.  Exit codes: 0 success, 1 invalid input, 2 budget or
nonconvergence, 3 an acceptance criterion failed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import click
import numpy as np

from . import __version__
from .errors import BudgetError, ValidationError, OutOfRange

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_FAILED = 0, 1, 2, 3


# ---------------------------------------------------------------- plumbing


def to_jsonable(obj: Any) -> Any:
    """Recursively convert results to plain JSON types; complex numbers become {re, im}."""
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def json_text(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """What was run, with which resolved parameters, and checksums of what it wrote."""

    command: str
    params: dict
    seeds: dict = field(default_factory=dict)
    version: str = __version__
    checksums: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "params": to_jsonable(self.params),
            "seeds": self.seeds,
            "version": self.version,
            "checksums": self.checksums,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        return cls(data["command"], dict(data["params"]), dict(data.get("seeds", {})), data.get("version", ""), dict(data.get("checksums", {})))


def read_config(path: str) -> dict:
    """key=value lines ('#' starts a comment) or a JSON run manifest."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        params = data.get("params", data)
        return {k: _config_value(v) for k, v in params.items() if v is not None}
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _config_value(v: Any) -> Any:
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return str(complex(v["re"], v["im"]))
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    return v


class ComplexParam(click.ParamType):
    name = "complex"

    def convert(self, value, param, ctx):
        if isinstance(value, complex):
            return value
        try:
            return complex(str(value).replace(" ", "").replace("i", "j"))
        except ValueError:
            self.fail(f"{value!r} is not a complex number", param, ctx)


class ListParam(click.ParamType):
    """Comma-separated list of ints or floats."""

    def __init__(self, kind):
        self.kind = kind
        self.name = f"{kind.__name__}-list"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return tuple(self.kind(v) for v in value)
        try:
            return tuple(self.kind(v) for v in str(value).split(",") if v.strip())
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of {self.kind.__name__}", param, ctx)


COMPLEX = ComplexParam()
INTS = ListParam(int)
FLOATS = ListParam(float)


def _emit(ctx: click.Context, artifacts: dict[str, str], seeds: Optional[dict] = None, echo: Optional[str] = None) -> None:
    """Print the primary artifact and, with --out, write every artifact plus its manifest."""
    root = ctx.find_root()
    out_dir = root.obj.get("out") if root.obj else None
    click.echo(echo if echo is not None else next(iter(artifacts.values())), nl=False)
    if not out_dir:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(ctx.info_name, dict(ctx.params), seeds or {})
    for name, text in artifacts.items():
        with open(path / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        manifest.checksums[name] = sha256(text)
    (path / f"{ctx.info_name}.manifest.json").write_text(json_text(manifest), encoding="utf-8")


def model_options(fn):
    for opt in reversed(
        [
            click.option("--a", type=float, help="specialisation a in (0, 1)"),
            click.option("--t", type=float, help="Hall-Littlewood parameter t in (0, 1)"),
            click.option("--b1", type=float, help="vertex weight b1 (alternative to a, t)"),
            click.option("--b2", type=float, help="vertex weight b2 (alternative to a, t)"),
        ]
    ):
        fn = opt(fn)
    return fn


def _model(a, t, b1, b2):
    from .params import param_convert

    return param_convert(a=a, t=t, b1=b1, b2=b2)


def _radii(params, values):
    from .params import make_radii

    if not values:
        return None
    if len(values) != 4:
        raise OutOfRange("--radii needs four values r1,r2,r3,r4")
    return make_radii(params, *values)


# ---------------------------------------------------------------- commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="sixvertex-airy")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="key=value file or JSON run manifest")
@click.option("--out", type=click.Path(file_okay=False), help="directory for artifacts and the run manifest")
@click.pass_context
def main(ctx: click.Context, config: Optional[str], out: Optional[str]) -> None:
    """Exact prelimit formulas for the stochastic six-vertex model and their Airy limits."""
    ctx.ensure_object(dict)
    ctx.obj["out"] = out
    if config:
        ctx.default_map = {ctx.invoked_subcommand: read_config(config)}


@main.command("params-check")
@model_options
@click.option("--target-rho", type=float, default=0.5, show_default=True)
@click.pass_context
def params_check(ctx, a, t, b1, b2, target_rho):
    """Parameter conversion, good-radii search and scaling constants."""
    from .params import find_good_radii, scaling_constants
    from .scaling import DescentContours

    p = _model(a, t, b1, b2)
    radii = find_good_radii(p, target_rho)
    sigma, f1, f1p, f1pp = scaling_constants(p.a)
    payload = {
        "params": p,
        "good": radii is not None,
        "radii": radii,
        "rho": radii.rho if radii is not None else None,
        "scaling": {"sigma_a": sigma, "f1": f1, "f1_prime": f1p, "f1_double_prime": f1pp},
        "descent_slope": DescentContours.choose(p.a, p.t).A,
    }
    _emit(ctx, {"params-check.json": json_text(payload)})


@main.command("sample")
@model_options
@click.option("--M", "M", type=int, required=True, help="box height")
@click.option("--columns", type=INTS, required=True, help="comma-separated columns n")
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--start", type=int, default=0, show_default=True, help="index of the first sample")
@click.option("--threads", type=int, default=os.cpu_count() or 1, show_default=True)
@click.pass_context
def sample(ctx, a, t, b1, b2, M, columns, count, seed, start, threads):
    """Exact samples; one CSV row per sample with heights h(n+1, M)."""
    from .sixvertex import sample_top_exits

    p = _model(a, t, b1, b2)
    exits = sample_top_exits(p, M, columns, count, seed=seed, start=start, threads=threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["index"] + [f"h_{n + 1}" for n in columns])
    for k, row in enumerate(exits):
        w.writerow([start + k] + [int(M - e) for e in row])
    _emit(ctx, {"sample.csv": buf.getvalue()}, seeds={"seed": seed, "start": start})


@main.command("exact-law")
@model_options
@click.option("--M", "M", type=int, required=True)
@click.option("--n1", type=int, required=True)
@click.option("--n2", type=int, required=True)
@click.option("--M-cap", "M_cap", type=int, default=14, show_default=True)
@click.pass_context
def exact_law(ctx, a, t, b1, b2, M, n1, n2, M_cap):
    """Joint law of the top-exit counts at columns n2 <= n1 by transfer matrix."""
    from .sixvertex import exact_joint_height_law

    law = exact_joint_height_law(_model(a, t, b1, b2), M, n1, n2, M_cap)
    _emit(ctx, {"exact-law.json": json_text(law)})


@main.command("hl-law")
@click.option("--a", type=float, required=True)
@click.option("--t", type=float, required=True)
@click.option("--M", "M", type=int, required=True)
@click.option("--n1", type=int, required=True)
@click.option("--n2", type=int, required=True)
@click.option("--N", "N", type=int, default=None, help="chain length (default n1)")
@click.option("--part-cap", type=int, default=None, help="largest part kept (default adaptive)")
@click.option("--max-states", type=int, default=2_000_000, show_default=True)
@click.pass_context
def hl_law(ctx, a, t, M, n1, n2, N, part_cap, max_states):
    """Joint law of chain lengths under the Hall-Littlewood process."""
    from .hlp import truncated_joint_law

    law, tail = truncated_joint_law(a, t, N or n1, M, n1, n2, part_cap=part_cap, max_states=max_states)
    payload = law.to_json()
    payload["tail_bound"] = tail
    _emit(ctx, {"hl-law.json": json_text(payload)})


@main.command("tlaplace-series")
@click.option("--a", type=float, required=True)
@click.option("--t", type=float, required=True)
@click.option("--M", "M", type=int, required=True)
@click.option("--n1", type=int, required=True)
@click.option("--n2", type=int, required=True)
@click.option("--u1", type=COMPLEX, default="-0.5", show_default=True)
@click.option("--u2", type=COMPLEX, default="-0.25", show_default=True)
@click.option("--radii", type=FLOATS, default="", help="r1,r2,r3,r4 (default: good radii or a near-unit family)")
@click.option("--grid", type=int, default=32, show_default=True, help="nodes per circle")
@click.option("--ncap", type=int, default=4, show_default=True)
@click.option("--require-good", is_flag=True, help="fail unless radii with rho < 1 exist")
@click.option("--abs-tol", type=float, default=1e-14, show_default=True)
@click.option("--exact/--no-exact", default=False, help="also report the transfer-matrix value")
@click.pass_context
def tlaplace_series(ctx, a, t, M, n1, n2, u1, u2, radii, grid, ncap, require_good, abs_tol, exact):
    """Joint t-Laplace transform as a truncated contour-integral series."""
    from .contour import SeriesInputs, joint_t_laplace_series
    from .qseries import QTol
    from .sixvertex import exact_joint_height_law, law_observable

    p = _model(a, t, None, None)
    inp = SeriesInputs.homogeneous(p, M, n1, n2, u1, u2)
    r = joint_t_laplace_series(inp, _radii(p, radii), grid, ncap, QTol(abs_tol), require_good)
    payload = r.to_json()
    if exact:
        payload["exact"] = law_observable(exact_joint_height_law(p, M, n1, n2), t, u1, u2)
    _emit(ctx, {"tlaplace-series.json": json_text(payload)})


@main.command("moment-series")
@click.option("--a", type=float, required=True)
@click.option("--t", type=float, required=True)
@click.option("--k", type=int, required=True, help="moment order")
@click.option("--n", type=int, required=True, help="column of the moment")
@click.option("--N", "N", type=int, required=True, help="column of the t-Laplace factor")
@click.option("--M", "M", type=int, required=True)
@click.option("--u1", type=COMPLEX, default="0", show_default=True)
@click.option("--radii", type=FLOATS, default="", help="r1,r2,r3")
@click.option("--grid", type=int, default=32, show_default=True)
@click.option("--n1-max", type=int, default=8, show_default=True)
@click.option("--abs-tol", type=float, default=1e-14, show_default=True)
@click.pass_context
def moment_series_cmd(ctx, a, t, k, n, N, M, u1, radii, grid, n1_max, abs_tol):
    """E[t^{-k L(n)} / (u1 t^{-L(N)}; t)_inf] as a contour-integral series."""
    from .contour import moment_series
    from .qseries import QTol

    p = _model(a, t, None, None)
    r = moment_series(p, k, n, N, radii or None, u1, grid, n1_max, M=M, tol=QTol(abs_tol))
    _emit(ctx, {"moment-series.json": json_text(r)})


@main.command("verify-identities")
@click.option("--k", type=int, default=2, show_default=True, help="order of the nested-contour identity")
@click.option("--q", type=float, default=2.0, show_default=True)
@click.option("--t", type=float, default=0.3, show_default=True, help="t of the expansion identity")
@click.option("--u", type=COMPLEX, default="-0.2+0.1j", show_default=True)
@click.option("--nodes", type=int, default=256, show_default=True)
@click.pass_context
def verify_identities(ctx, k, q, t, u, nodes):
    """Residuals of the residue-expansion identities."""
    from .contour import ExpansionConfig, expansion_residual, nested_residual

    payload = {
        "nested_residual": nested_residual(k, q, nodes=nodes),
        "expansion_residual": expansion_residual(ExpansionConfig(t=t, u=u), nodes),
    }
    _emit(ctx, {"verify-identities.json": json_text(payload)})


@main.command("airy-cdf")
@click.option("--x1", type=float, required=True)
@click.option("--x2", type=float, required=True)
@click.option("--tau1", type=float, required=True)
@click.option("--tau2", type=float, required=True)
@click.option("--method", type=click.Choice(["nystrom", "series", "both"]), default="nystrom", show_default=True)
@click.option("--ncap", type=int, default=4, show_default=True)
@click.pass_context
def airy_cdf(ctx, x1, x2, tau1, tau2, method, ncap):
    """P(A(tau1) <= x1, A(tau2) <= x2) for the Airy process."""
    from .airy import fredholm_two_point_cdf, series_two_point_cdf

    payload: dict = {}
    if method in ("nystrom", "both"):
        payload["nystrom"] = {"value": fredholm_two_point_cdf(tau1, tau2, x1, x2)}
    if method in ("series", "both"):
        s = series_two_point_cdf(x1, x2, tau1, tau2, Ncap=ncap)
        payload["series"] = {"value": s.value.real, "err_est": s.err_est, "tail_est": s.tail_est, "imag": s.value.imag}
    if method == "both":
        payload["abs_diff"] = abs(payload["nystrom"]["value"] - payload["series"]["value"])
    payload["value"] = next(v["value"] for k, v in payload.items() if isinstance(v, dict))
    _emit(ctx, {"airy-cdf.json": json_text(payload)})


@main.command("airy-series")
@click.option("--x1", type=float, required=True)
@click.option("--x2", type=float, required=True)
@click.option("--tau1", type=float, required=True)
@click.option("--tau2", type=float, required=True)
@click.option("--ncap", type=int, default=4, show_default=True)
@click.pass_context
def airy_series(ctx, x1, x2, tau1, tau2, ncap):
    """Table of limit terms K(N1, N2) and their truncated sum."""
    from .airy import contour_term_table, series_two_point_cdf

    table, full, c = contour_term_table(x1, x2, tau1, tau2, ncap)
    s = series_two_point_cdf(x1, x2, tau1, tau2, Ncap=ncap)
    payload = {
        "terms": {f"{i},{j}": table[i, j] for i in range(ncap + 1) for j in range(ncap + 1)},
        "abscissas": list(c),
        "untruncated": full,
        "result": s,
    }
    _emit(ctx, {"airy-series.json": json_text(payload)})


@main.command("converge")
@model_options
@click.option("--M-list", "M_list", type=INTS, default="40,80,160,320", show_default=True)
@click.option("--samples", type=int, default=10_000, show_default=True)
@click.option("--s1", type=float, default=1.0, show_default=True)
@click.option("--s2", type=float, default=-1.0, show_default=True)
@click.option("--x1-grid", type=FLOATS, default="-3,-2,-1,0,1", show_default=True)
@click.option("--x2-grid", type=FLOATS, default="-3,-2,-1,0,1", show_default=True)
@click.option("--bootstrap", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=os.cpu_count() or 1, show_default=True)
@click.pass_context
def converge(ctx, a, t, b1, b2, M_list, samples, s1, s2, x1_grid, x2_grid, bootstrap, seed, threads):
    """Monte Carlo joint CDF of rescaled heights against the Airy reference."""
    from .scaling import convergence_experiment

    p = _model(a, t, b1, b2)
    report = convergence_experiment(p, M_list, samples, s1, s2, seed, x1_grid, x2_grid, bootstrap, threads=threads)
    summary = report.to_json_text() + "\n"
    _emit(ctx, {"converge.json": summary, "converge.csv": report.to_csv()}, seeds={"seed": seed})


@main.command("acceptance")
@click.option("--only", type=INTS, default="", help="comma-separated criterion numbers (default all)")
@click.pass_context
def acceptance(ctx, only):
    """Run the acceptance suite; one line per criterion."""
    from .acceptance import run_acceptance

    results = run_acceptance(only or None, echo=click.echo)
    payload = {"passed": all(r.passed for r in results), "criteria": [r.to_json() for r in results]}
    _emit(ctx, {"acceptance.json": json_text(payload)}, echo="")
    return EXIT_OK if payload["passed"] else EXIT_FAILED


def run(argv: Optional[list[str]] = None) -> int:
    """Entry point; returns the exit status instead of raising SystemExit."""
    try:
        rv = main.main(args=argv, prog_name="sixvertex-airy", standalone_mode=False)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    except BudgetError as exc:
        click.echo(f"budget exceeded: {exc}", err=True)
        return EXIT_BUDGET
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except click.Abort:
        return EXIT_INVALID
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
