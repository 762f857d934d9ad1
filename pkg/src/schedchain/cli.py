"""Command-line front end for the scheduler-chain engines.

Subcommands
-----------
run          exact per-quantum distributions via matrix propagation
closed-form  per-quantum distributions from the scheme's analytic form
simulate     Monte Carlo occupancy frequencies (seeded, reproducible)
absorb       Monte Carlo first-deadlock times (histogram plus summary)
compare      side-by-side scheme metrics with an efficiency ranking

Trajectory-style CSV output has the header ``quantum,P1,...,Pm,D``, one row
per quantum, probabilities printed with 12 significant digits and LF line
endings.  JSON output wraps the same rows in an object with a ``meta`` block
(command, scheme, parameters, pb, horizon, walks, seed, engine, version)
that can be fed back through ``RunSpec.from_meta`` to reproduce the run
byte for byte.  The output destination is not part of ``meta``.

Exit codes: 0 success, 1 engine cross-check divergence (``--verify``),
2 usage error, 3 scheme constraint violation, 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import compare as compare_presets
from .model import (
    DimensionError,
    Distribution,
    ModelError,
    ParameterError,
    SchemeParams,
    build_matrix,
    propagate,
    state_labels,
)
from .montecarlo import CENSORED, SimConfig, absorption_times, simulate
from .schemes import (
    CONSTRAINTS,
    ConstraintError,
    SchemeId,
    closed_form_trajectory,
    make_preset,
)

__all__ = ["RunSpec", "EngineDivergence", "parse_args", "execute", "emit", "main"]

#: Maximum componentwise gap tolerated by ``run --verify``.
VERIFY_TOL = 1e-10

_PARAM_NAMES = ("p", "s", "q", "r")
_SCHEME_CHOICES = [scheme.value for scheme in SchemeId]


class EngineDivergence(RuntimeError):
    """Raised when --verify finds the two engines disagreeing."""


@dataclass
class RunSpec:
    """Everything one invocation computes, minus where the output goes."""

    command: str
    scheme: str | None = None
    free: dict[str, float] = field(default_factory=dict)
    pb: tuple[float, ...] | None = None
    m: int | None = None
    quanta: int = 50
    walks: int | None = None
    seed: int | None = None
    fmt: str = "csv"
    output: str | None = None
    verify: bool = False
    presets: tuple[tuple[str, dict[str, float]], ...] | None = None

    def to_meta(self, engine: str) -> dict:
        meta = {
            "command": self.command,
            "scheme": self.scheme,
            "free": dict(self.free),
            "pb": list(self.pb) if self.pb is not None else None,
            "m": self.m,
            "quanta": self.quanta,
            "walks": self.walks,
            "seed": self.seed,
            "format": self.fmt,
            "engine": engine,
            "version": __version__,
        }
        if self.presets is not None:
            meta["presets"] = [
                {"scheme": scheme, "free": dict(free)} for scheme, free in self.presets
            ]
        return meta

    @classmethod
    def from_meta(cls, meta: dict) -> "RunSpec":
        """Rebuild the spec from an emitted JSON ``meta`` block."""
        presets = None
        if meta.get("presets") is not None:
            presets = tuple(
                (entry["scheme"], _canon_free(entry["free"])) for entry in meta["presets"]
            )
        return cls(
            command=meta["command"],
            scheme=meta.get("scheme"),
            free=_canon_free(meta.get("free") or {}),
            pb=tuple(meta["pb"]) if meta.get("pb") is not None else None,
            m=meta.get("m"),
            quanta=meta["quanta"],
            walks=meta.get("walks"),
            seed=meta.get("seed"),
            fmt=meta.get("format", "json"),
            presets=presets,
        )


@dataclass
class Payload:
    """What a subcommand produced: a table plus JSON-only extras."""

    meta: dict
    columns: list[str]
    rows: list[list]
    extra: dict = field(default_factory=dict)


def _canon_free(mapping: dict[str, float]) -> dict[str, float]:
    # Fixed key order keeps emitted JSON byte-stable.
    return {name: float(mapping[name]) for name in _PARAM_NAMES if name in mapping}


def _parse_pb(text: str, parser: argparse.ArgumentParser) -> tuple[float, ...]:
    try:
        values = tuple(float(token) for token in text.split(","))
    except ValueError:
        parser.error(f"--pb must be comma-separated numbers, got {text!r}")
    if any(v < 0.0 for v in values):
        parser.error("--pb entries must be non-negative")
    if len(values) < 2:
        parser.error(f"--pb implies m={len(values)}, but m must be >= 2")
    total = sum(values)
    if abs(total - 1.0) > 1e-9:
        parser.error(f"--pb must sum to 1, got {total!r}")
    return values


def _parse_preset_token(text: str, parser: argparse.ArgumentParser) -> tuple[str, dict]:
    scheme, _, rest = text.partition(":")
    scheme = scheme.strip()
    if scheme not in _SCHEME_CHOICES:
        parser.error(f"unknown scheme {scheme!r} in --preset (choose from {_SCHEME_CHOICES})")
    free: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            name, sep, raw = item.partition("=")
            name = name.strip()
            if not sep or not raw:
                parser.error(f"bad --preset parameter {item!r} (expected name=value)")
            try:
                free[name] = float(raw)
            except ValueError:
                parser.error(f"bad --preset value {raw!r} for {name!r}")
    return scheme, _canon_free(free)


def _scheme_epilog() -> str:
    lines = ["scheme constraint sets:"]
    for scheme, cs in CONSTRAINTS.items():
        lines.append(f"  {scheme.value:<6} {cs.note}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schedchain",
        description="Quantum-by-quantum analysis of ring scheduling schemes "
        "with an absorbing deadlock state.",
        epilog=_scheme_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, walks: bool = False) -> None:
        p.add_argument("--pb", help="comma-separated initial process probabilities (sum 1)")
        p.add_argument("--m", type=int, help="ring size; inferred from --pb when given")
        p.add_argument("--quanta", "-n", type=int, default=50, help="horizon N (default 50)")
        for name in _PARAM_NAMES:
            p.add_argument(
                f"--{name}",
                type=float,
                help=f"move probability {name} (free scheme parameter, or raw without --scheme)",
            )
        p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
        p.add_argument("--output", "-o", help="output path (default: standard output)")
        if walks:
            p.add_argument("--walks", type=int, default=10000, help="walk count (default 10000)")
            p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (default 0)")

    run = sub.add_parser("run", help="exact matrix propagation")
    run.add_argument("--scheme", choices=_SCHEME_CHOICES)
    add_common(run)
    run.add_argument(
        "--verify",
        action="store_true",
        help=f"cross-check against the closed form; exit 1 beyond {VERIFY_TOL:g}",
    )

    closed = sub.add_parser("closed-form", help="per-scheme analytic distributions")
    closed.add_argument("--scheme", choices=_SCHEME_CHOICES, required=True)
    add_common(closed)

    sim = sub.add_parser("simulate", help="seeded Monte Carlo occupancy")
    sim.add_argument("--scheme", choices=_SCHEME_CHOICES)
    add_common(sim, walks=True)

    absorb = sub.add_parser("absorb", help="seeded Monte Carlo deadlock-hit times")
    absorb.add_argument("--scheme", choices=_SCHEME_CHOICES)
    add_common(absorb, walks=True)

    comp = sub.add_parser("compare", help="rank schemes by the efficiency index")
    comp.add_argument(
        "--preset",
        action="append",
        required=True,
        metavar="SCHEME[:k=v,...]",
        help="scheme plus its free parameters, e.g. III_B:p=0.417,r=0.166 (repeatable)",
    )
    add_common(comp)
    return parser


def parse_args(argv=None) -> RunSpec:
    """Turn an argument vector into a validated RunSpec (usage errors exit 2)."""
    parser = build_parser()
    ns = parser.parse_args(argv)

    pb = _parse_pb(ns.pb, parser) if ns.pb is not None else None
    if ns.m is not None and ns.m < 2:
        parser.error(f"--m must be >= 2, got {ns.m}")
    if pb is not None and ns.m is not None and len(pb) != ns.m:
        parser.error(f"--pb has {len(pb)} entries but --m is {ns.m}")
    if ns.quanta < 0:
        parser.error("--quanta must be non-negative")

    free = _canon_free(
        {name: getattr(ns, name) for name in _PARAM_NAMES if getattr(ns, name) is not None}
    )

    walks = getattr(ns, "walks", None)
    seed = getattr(ns, "seed", None)
    if ns.command in ("simulate", "absorb"):
        if walks < 1:
            parser.error("--walks must be >= 1")
        if ns.quanta < 1:
            parser.error(f"--quanta must be >= 1 for {ns.command}")
        if not 0 <= seed < 2 ** 64:
            parser.error("--seed must be a 64-bit unsigned integer")

    presets = None
    if ns.command == "compare":
        if ns.quanta < 1:
            parser.error("--quanta must be >= 1 for compare")
        if free:
            parser.error("compare takes parameters inside --preset, not bare flags")
        presets = tuple(_parse_preset_token(token, parser) for token in ns.preset)

    return RunSpec(
        command=ns.command,
        scheme=getattr(ns, "scheme", None),
        free=free,
        pb=pb,
        m=ns.m,
        quanta=ns.quanta,
        walks=walks,
        seed=seed,
        fmt=ns.fmt,
        output=ns.output,
        verify=getattr(ns, "verify", False),
        presets=presets,
    )


def _resolve(spec: RunSpec):
    """RunSpec -> (params, init, preset or None)."""
    if spec.scheme is not None:
        preset = make_preset(SchemeId(spec.scheme), spec.free or None, pb=spec.pb, m=spec.m)
        return preset.params, preset.init, preset
    if spec.pb is None:
        raise ParameterError("raw-parameter runs need --pb")
    values = {name: 0.0 for name in _PARAM_NAMES}
    values.update(spec.free)
    init = Distribution.from_process_probs(spec.pb)
    if spec.m is not None and init.m != spec.m:
        raise DimensionError(f"pb has {init.m} entries but m={spec.m} was requested")
    params = SchemeParams(values["p"], values["s"], values["q"], values["r"], init.m)
    return params, init, None


def _trajectory_payload(spec: RunSpec, engine: str, table: np.ndarray, m: int) -> Payload:
    columns = ["quantum"] + state_labels(m)
    rows = [[n] + [float(v) for v in table[n]] for n in range(table.shape[0])]
    return Payload(spec.to_meta(engine), columns, rows)


def _exec_run(spec: RunSpec) -> Payload:
    params, init, preset = _resolve(spec)
    trajectory = propagate(init, build_matrix(params), spec.quanta)
    if spec.verify:
        if preset is None:
            raise ParameterError("--verify needs --scheme (raw parameters have no closed form)")
        analytic = closed_form_trajectory(preset, spec.quanta)
        gap = float(np.max(np.abs(trajectory.to_array() - analytic.to_array())))
        if gap > VERIFY_TOL:
            raise EngineDivergence(
                f"matrix and closed-form engines diverge by {gap:.3e} (> {VERIFY_TOL:g})"
            )
    return _trajectory_payload(spec, "matrix", trajectory.to_array(), params.m)


def _exec_closed_form(spec: RunSpec) -> Payload:
    _, _, preset = _resolve(spec)
    trajectory = closed_form_trajectory(preset, spec.quanta)
    return _trajectory_payload(spec, "closed-form", trajectory.to_array(), preset.params.m)


def _exec_simulate(spec: RunSpec) -> Payload:
    params, init, _ = _resolve(spec)
    config = SimConfig(params, init, spec.quanta, spec.walks, spec.seed)
    estimate = simulate(config)
    payload = _trajectory_payload(spec, "montecarlo", estimate.frequencies, params.m)
    payload.extra = {"n_walks": estimate.n_walks}
    return payload


def _exec_absorb(spec: RunSpec) -> Payload:
    params, init, _ = _resolve(spec)
    config = SimConfig(params, init, spec.quanta, spec.walks, spec.seed)
    sample = absorption_times(config)
    observed = sample.first_hit[sample.first_hit != CENSORED]
    histogram = np.bincount(observed, minlength=spec.quanta + 1)
    rows = [[n, int(c)] for n, c in enumerate(histogram)]
    rows.append([CENSORED, sample.n_censored])
    mean = sample.mean_first_hit
    summary = {
        "mean_first_hit": None if np.isnan(mean) else mean,
        "n_walks": sample.n_walks,
        "n_censored": sample.n_censored,
        "censored_fraction": sample.censored_fraction,
        "biased_low": sample.biased_low,
        "horizon": sample.horizon,
    }
    return Payload(
        spec.to_meta("montecarlo"),
        ["first_hit_quantum", "walks"],
        rows,
        {"summary": summary},
    )


def _exec_compare(spec: RunSpec) -> Payload:
    presets = [
        make_preset(SchemeId(scheme), free or None, pb=spec.pb, m=spec.m)
        for scheme, free in spec.presets
    ]
    report = compare_presets(presets, spec.quanta)
    columns = ["scheme", "quantum", "survival", "fairness", "efficiency_index"]
    rows = []
    schemes_json = []
    for entry in report.entries:
        mx = entry.metrics
        for n in range(spec.quanta + 1):
            rows.append(
                [entry.scheme.value, n, float(mx.survival[n]), float(mx.fairness[n]),
                 float(mx.efficiency_index[n])]
            )
        expected = mx.expected_absorption
        schemes_json.append(
            {
                "scheme": entry.scheme.value,
                "params": {name: getattr(entry.params, name) for name in _PARAM_NAMES},
                "m": entry.params.m,
                "expected_absorption": None if np.isinf(expected) else expected,
                "final_survival": float(mx.survival[-1]),
                "final_fairness": float(mx.fairness[-1]),
                "final_efficiency_index": float(mx.efficiency_index[-1]),
            }
        )
    extra = {
        "ranking": [scheme.value for scheme in report.ranked_schemes],
        "schemes": schemes_json,
    }
    return Payload(spec.to_meta("matrix"), columns, rows, extra)


_EXECUTORS = {
    "run": _exec_run,
    "closed-form": _exec_closed_form,
    "simulate": _exec_simulate,
    "absorb": _exec_absorb,
    "compare": _exec_compare,
}


def execute(spec: RunSpec) -> Payload:
    """Run the engines for a spec and return the emission payload."""
    try:
        executor = _EXECUTORS[spec.command]
    except KeyError:
        raise ParameterError(f"unknown command {spec.command!r}") from None
    return executor(spec)


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def render_csv(payload: Payload) -> str:
    lines = [",".join(payload.columns)]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in payload.rows)
    return "\n".join(lines) + "\n"


def render_json(payload: Payload) -> str:
    obj = {"meta": payload.meta, "columns": payload.columns, "rows": payload.rows}
    obj.update(payload.extra)
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def emit(payload: Payload, fmt: str, output: str | None) -> None:
    """Serialize the payload as CSV or JSON to a file or standard output."""
    text = render_csv(payload) if fmt == "csv" else render_json(payload)
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    spec = parse_args(argv)
    try:
        payload = execute(spec)
    except EngineDivergence as exc:
        print(f"schedchain: verification failed: {exc}", file=sys.stderr)
        return 1
    except ConstraintError as exc:
        print(f"schedchain: constraint violation: {exc}", file=sys.stderr)
        return 3
    except ModelError as exc:
        print(f"schedchain: error: {exc}", file=sys.stderr)
        return 2
    try:
        emit(payload, spec.fmt, spec.output)
    except OSError as exc:
        print(f"schedchain: cannot write output: {exc}", file=sys.stderr)
        return 4
    return 0
