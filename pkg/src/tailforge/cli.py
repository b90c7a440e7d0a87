"""Command-line interface.

Sequence descriptors are JSON objects ``{"family": name, ...params}``:

=================  ==============================================
family             fields
=================  ==============================================
polynomial         c, beta            r_k = c k^-beta
stretched-exp      c, beta            r_k = c exp(-k^beta)
geometric          c, q               r_k = c q^k
gnedin-sinh        lambda
gnedin-cosh        lambda
ginibre            t                  exponential-jump renewal
list               values             finite list of r_k
poissonized-range  t, base, variant, j  base is a descriptor
records            alpha              alpha is a descriptor
perturbed          base, epsilons     epsilons is a list
=================  ==============================================

A config file (``--config``) is a JSON object with the fields
``sequence, command, n, n_grid, tol, residual_tol, samples, seed, regime,
output, output_path``; unknown fields are rejected and flags override it.

Exit codes: 0 success, 2 unsolvable level, 3 configuration error,
4 undetermined regime, 5 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .cgf import DEFAULT_TOL
from .closed_forms import thm4a, thm4b, thm4c, thm4d
from .errors import (CannotEstimateError, InvalidPerturbationError, LevelTooSmallError,
                     NoSolutionError, NotRegimeCError, ParameterDomainError, TailforgeError,
                     UnsupportedFamilyError)
from .estimates import estimate
from .exact import (binomial_log_pmf, exact_pmf, gnedin_cosh_log_pmf, gnedin_sinh_log_pmf,
                    mc_tilted)
from .regime import classify
from .saddle import solve
from .sequences import (ExplicitList, GnedinCosh, GnedinSinh, Polynomial, SequenceDescriptor,
                        StretchedExp, from_dict)

EXIT_OK, EXIT_UNSOLVABLE, EXIT_CONFIG, EXIT_UNDETERMINED, EXIT_ORACLE = 0, 2, 3, 4, 5
COMMANDS = ("saddle", "classify", "estimate", "compare", "mc", "terms", "pmf")
CONFIG_FIELDS = {"sequence", "command", "n", "n_grid", "tol", "residual_tol", "samples",
                 "seed", "regime", "output", "output_path"}


class ConfigError(Exception):
    pass


class OracleError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    sequence: dict
    command: str
    n: int | None = None
    n_grid: list[int] | None = None
    tol: float = DEFAULT_TOL
    residual_tol: float | None = None
    samples: int = 100_000
    seed: int = 0
    regime: str | None = None
    output: str = "json"
    output_path: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.output not in ("json", "csv"):
            raise ConfigError("output must be 'json' or 'csv'")
        if self.command in ("saddle", "estimate", "mc", "terms", "pmf"):
            if self.n is None and not self.n_grid:
                raise ConfigError(f"{self.command} needs --n or --grid")
        if self.command in ("classify", "compare") and not self.n_grid:
            raise ConfigError(f"{self.command} needs --grid")
        if self.regime not in (None, "A", "B", "C"):
            raise ConfigError("regime must be A, B or C")
        if not self.tol > 0 or (self.residual_tol is not None and not self.residual_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.samples < 1:
            raise ConfigError("samples must be positive")

    @property
    def levels(self) -> list[int]:
        return list(self.n_grid) if self.n_grid else [int(self.n)]


def parse_grid(text: str | Sequence[int]) -> list[int]:
    """``"a,b,c"`` or ``"start:stop:factor"`` (geometric, stop inclusive)."""
    if not isinstance(text, str):
        return [int(v) for v in text]
    try:
        if ":" in text:
            start, stop, factor = (float(p) for p in text.split(":"))
            if start <= 0 or factor <= 1:
                raise ConfigError("grid needs start > 0 and factor > 1")
            out, v = [], start
            while v <= stop * (1 + 1e-12):
                out.append(int(round(v)))
                v *= factor
            return out
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"malformed grid {text!r}") from None


def _read_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _read_list(path: str) -> list[float]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = text.strip().strip("[]").replace(",", " ").split()
    try:
        return [float(v) for v in data]
    except (TypeError, ValueError):
        raise ConfigError(f"{path} is not a list of numbers") from None


def _sequence_from_flags(a: argparse.Namespace) -> dict | None:
    if a.family is None:
        return None
    d: dict[str, Any] = {"family": a.family}
    for flag, key in (("c", "c"), ("beta", "beta"), ("lam", "lambda"), ("t", "t"), ("q", "q")):
        v = getattr(a, flag)
        if v is not None:
            d[key] = v
    if a.list_file:
        d["values"] = _read_list(a.list_file)
    if a.alpha_file:
        d["alpha" if a.family == "records" else "base"] = _read_json(a.alpha_file)
    return d


def build_config(argv: Sequence[str] | None = None) -> RunConfig:
    p = _Parser(prog="tailforge", description="Tail probabilities of sums of independent indicators.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--family")
    p.add_argument("--c", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--alpha-file", help="descriptor JSON of the inner sequence (records, poissonized-range)")
    p.add_argument("--list-file", help="r_k values as a JSON array or whitespace separated")
    p.add_argument("--n", type=int)
    p.add_argument("--grid", help='"a,b,c" or "start:stop:factor"')
    p.add_argument("--tol", type=float)
    p.add_argument("--residual-tol", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--regime", help="force regime A, B or C for estimates")
    p.add_argument("--format", dest="output", choices=("json", "csv"))
    p.add_argument("--out", dest="output_path")
    a = p.parse_args(argv)

    base: dict[str, Any] = {}
    if a.config:
        base = _read_json(a.config)
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(base) - CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    flags = {"command": a.command, "n": a.n, "tol": a.tol, "residual_tol": a.residual_tol,
             "samples": a.samples, "seed": a.seed, "regime": a.regime, "output": a.output,
             "output_path": a.output_path}
    if a.grid is not None:
        flags["n_grid"] = a.grid
    seq = _sequence_from_flags(a)
    if seq is not None:
        flags["sequence"] = seq
    merged = {**base, **{k: v for k, v in flags.items() if v is not None}}
    if "sequence" not in merged:
        raise ConfigError("no sequence given (use --family or a config file)")
    if "n_grid" in merged:
        merged["n_grid"] = parse_grid(merged["n_grid"])
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Commands; each returns a list of flat rows (CSV) and a JSON payload
# ---------------------------------------------------------------------------

def cmd_saddle(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    rows = [solve(seq, n, cfg.residual_tol).to_dict() for n in cfg.levels]
    return rows, rows if cfg.n_grid else rows[0]


def cmd_classify(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    rep = classify(seq, cfg.n_grid, tol=cfg.tol)
    rows = [{"label": rep.label, **g.to_dict()} for g in rep.grid]
    return rows, rep.to_dict()


def cmd_estimate(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    out = []
    for n in cfg.levels:
        est = estimate(seq, n, cfg.regime, tol=cfg.tol)
        out.append(est.to_dict())
    rows = [{k: v for k, v in d.items() if k != "saddle"} | {"s": d["saddle"]["s"]} for d in out]
    return rows, out if cfg.n_grid else out[0]


def explicit_estimate(seq: SequenceDescriptor, n: int):
    """Closed-form asymptotic for the four explicit families, or None."""
    if isinstance(seq, GnedinSinh):
        lam = seq.lam
        r = thm4a(lam ** 2 / math.pi ** 2, 2.0, n)
        r.terms["transfer"] = math.log(lam / math.sinh(lam))
        return r
    if isinstance(seq, Polynomial):
        return thm4a(seq.c, seq.beta, n)
    if isinstance(seq, StretchedExp):
        if seq.beta < 1.0:
            return thm4b(seq.c, seq.beta, n)
        if seq.beta == 1.0:
            return thm4c(seq.c, n)
        return thm4d(seq.c, seq.beta, n, constant_correction=True)
    return None


def exact_log_pmf(seq: SequenceDescriptor, levels: Sequence[int], tol: float) -> np.ndarray:
    """Closed form where one exists, else the exact convolution table."""
    lv = np.asarray(levels, dtype=int)
    if isinstance(seq, GnedinSinh):
        return np.asarray(gnedin_sinh_log_pmf(seq.lam, lv), dtype=float)
    if isinstance(seq, GnedinCosh):
        return np.asarray(gnedin_cosh_log_pmf(seq.lam, lv), dtype=float)
    if isinstance(seq, ExplicitList) and np.all(seq.probabilities == seq.probabilities[0]):
        m = seq.probabilities.size
        return np.array([binomial_log_pmf(m, float(seq.probabilities[0]), int(n)) for n in lv])
    try:
        pmf = exact_pmf(seq, int(lv.max()), rel_tol=tol)
    except TailforgeError as exc:
        raise OracleError(str(exc)) from exc
    return pmf.log_p[lv]


def cmd_compare(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    grid = cfg.n_grid
    regime = cfg.regime
    report = None
    if regime is None:
        report = classify(seq, grid, tol=cfg.tol)
        if report.label == "undetermined":
            raise CannotEstimateError("regime undetermined on this grid; pass --regime")
        regime = report.label
    exact = exact_log_pmf(seq, grid, cfg.tol)
    rows = []
    for n, ex in zip(grid, exact):
        gen = estimate(seq, n, regime, c0=_report_c0(report)).log_point
        xp = explicit_estimate(seq, n)
        xv = math.nan if xp is None else xp.log_value
        rows.append({"n": n, "log_exact": float(ex), "log_generic": gen, "log_explicit": xv,
                     "gap_generic": gen - float(ex), "gap_explicit": xv - float(ex)})
    payload = {"sequence": seq.to_dict(), "regime": regime, "rows": []}
    for i, r in enumerate(rows):
        extra = {}
        for key in ("gap_generic", "gap_explicit"):
            prev = rows[i - 1][key] if i else math.nan
            extra[f"ratio_{key}"] = r[key] / prev if i and prev != 0 else math.nan
        payload["rows"].append(r | extra)
    return rows, payload


def _report_c0(report) -> float | None:
    if report is None or report.c_data is None or report.c_data.c0 is None:
        return None
    return report.c_data.c0.value


def cmd_mc(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    rows = [mc_tilted(seq, n, cfg.samples, cfg.seed).to_dict() for n in cfg.levels]
    return rows, rows if cfg.n_grid else rows[0]


def cmd_terms(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    out = []
    for n in cfg.levels:
        xp = explicit_estimate(seq, n)
        if xp is None:
            raise UnsupportedFamilyError(f"no closed form for family {seq.family!r}")
        out.append(xp.to_dict())
    rows = [{"n": d["n"], "term": k, "value": v} for d in out for k, v in d["terms"].items()]
    return rows, out if cfg.n_grid else out[0]


def cmd_pmf(seq: SequenceDescriptor, cfg: RunConfig) -> tuple[list[dict], Any]:
    try:
        pmf = exact_pmf(seq, max(cfg.levels), rel_tol=cfg.tol)
    except TailforgeError as exc:
        raise OracleError(str(exc)) from exc
    rows = [{"n": n, "log_p": float(v)} for n, v in enumerate(pmf.log_p)]
    return rows, pmf.to_dict()


HANDLERS = {"saddle": cmd_saddle, "classify": cmd_classify, "estimate": cmd_estimate,
            "compare": cmd_compare, "mc": cmd_mc, "terms": cmd_terms, "pmf": cmd_pmf}

# ---------------------------------------------------------------------------


def _fmt(v: Any) -> Any:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        keys = [k for k, v in rows[0].items() if not isinstance(v, (dict, list))]
        w = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in keys})
    return buf.getvalue()


def _json_default(o: Any) -> Any:
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _finite(o: Any) -> Any:
    # strict JSON: non-finite numbers become null
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, np.ndarray):
        return _finite(o.tolist())
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return None
    return o


def to_json(payload: Any) -> str:
    return json.dumps(_finite(payload), indent=2, default=_json_default, allow_nan=False) + "\n"


def run(cfg: RunConfig) -> str:
    try:
        seq = from_dict(cfg.sequence)
    except TailforgeError as exc:
        raise ConfigError(str(exc)) from None
    rows, payload = HANDLERS[cfg.command](seq, cfg)
    if cfg.command == "classify" and payload["label"] == "undetermined":
        text = to_json(payload) if cfg.output == "json" else to_csv(rows)
        raise _Undetermined(text)
    return to_json(payload) if cfg.output == "json" else to_csv(rows)


class _Undetermined(Exception):
    def __init__(self, text: str):
        super().__init__("regime undetermined")
        self.text = text


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    cfg = None
    try:
        try:
            cfg = build_config(argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return int(exc.code or 0)
        _emit(run(cfg), cfg.output_path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"tailforge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Undetermined as exc:
        _emit(exc.text, cfg.output_path if cfg else None)
        print("tailforge: regime undetermined", file=sys.stderr)
        return EXIT_UNDETERMINED
    except (LevelTooSmallError, NoSolutionError) as exc:
        print(f"tailforge: unsolvable level: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except CannotEstimateError as exc:
        print(f"tailforge: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED
    except OracleError as exc:
        print(f"tailforge: oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ParameterDomainError, InvalidPerturbationError, UnsupportedFamilyError) as exc:
        print(f"tailforge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotRegimeCError as exc:
        print(f"tailforge: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED
    except TailforgeError as exc:
        # numerical failures (truncation, stalled iterations) leave the level unsolved
        print(f"tailforge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE


if __name__ == "__main__":
    sys.exit(main())
