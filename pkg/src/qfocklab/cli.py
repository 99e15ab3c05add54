"""Command line driver: load a JSON run configuration, execute the pipeline
and write a deterministic JSON or CSV report.

    qfocklab <report|gram|moments|modular|verdict|probe> --config run.json
             [--out path] [--format json|csv]

Exit codes: 0 when every check passes, 1 on a tolerance violation, 2 on a
configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import scipy

from . import __version__, analysis, kernels, qcomb
from .fock import (
    DEFAULT_WORD_BUDGET,
    BudgetError,
    annihilation,
    build_fock,
    creation,
    gram_adjoint,
    q_commutation_residual,
)
from .fock import field as field_op
from .modular import (
    build_modular,
    commutant_locality_residual,
    covariance_residual,
    delta_quarter_norm,
    j_involution_residual,
    s_property_residual,
)
from .repn import RepresentationSpec, build

SUBCOMMANDS = ("report", "gram", "moments", "modular", "verdict", "probe")
STAGES = {
    "report": ("gram", "moments", "modular", "verdict", "probe"),
    "gram": ("gram",),
    "moments": ("moments",),
    "modular": ("modular",),
    "verdict": ("verdict",),
    "probe": ("probe",),
}

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# tolerances
TOL_EXACT = 1e-12
TOL_STRUCT = 1e-10
GRAM_ORACLE_LEVEL = 3

ANCHOR_MU = "mu = |Delta^{1/4} xi|_q^2 = sum_j |P_j xi|^2 + sum_k 2*sqrt(lambda_k)/(1+lambda_k) |P_k xi|^2"
ANCHOR_HS = "sum_m mu^m = 1/(1-mu) - mu^(N+1)/(1-mu)"
ANCHOR_NUCLEAR = "sum_m mu^(m/2) = 1/(1-sqrt(mu)) - sqrt(mu)^(N+1)/(1-sqrt(mu))"
ANCHOR_PSI = "|psi_m| <= 1"
ANCHOR_MOMENT = "phi(s(xi)^n) = sum over pair partitions of q^crossings"
ANCHOR_CATALAN = "q = 0 even moments are Catalan numbers"
ANCHOR_COVARIANCE = "sigma_{-t}(s(xi)) = s(U_t xi)"
ANCHOR_NORM_FORMULA = "|xi^{(x) n}|_q^2 = [n]_q!"
ANCHOR_HERMITE = "xi^{(x) n} = H_n(s(xi)) Omega"
ANCHOR_QUARTER = "|Delta^{1/4} xi|_q^2 = <2 A^{1/2}/(1+A) xi, xi>"
ANCHOR_S = "J Delta^{1/2} x Omega = x^* Omega"


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


# configuration ---------------------------------------------------------------

@dataclass
class RunConfig:
    q: float
    n_fixed: int
    lambdas: list
    cutoff: int
    vectors: dict  # name -> raw real coordinates, as given
    t_grid: list = field(default_factory=lambda: [0.0])
    n_max_moments: int = 2
    probe_degree: int = 0
    seed: int = 0
    budgets: dict = field(default_factory=lambda: {
        "words": DEFAULT_WORD_BUDGET, "probe_span": analysis.DEFAULT_PROBE_BUDGET})
    samples: int = 100

    @property
    def spec(self) -> RepresentationSpec:
        return RepresentationSpec(self.n_fixed, tuple(self.lambdas))

    @property
    def norms(self) -> dict:
        return {k: float(np.linalg.norm(v)) for k, v in self.vectors.items()}

    def normalized(self, name: str) -> np.ndarray:
        v = np.asarray(self.vectors[name], dtype=np.float64)
        return v / np.linalg.norm(v)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n_fixed": self.n_fixed,
            "lambdas": list(self.lambdas),
            "cutoff": self.cutoff,
            "vectors": {k: list(v) for k, v in self.vectors.items()},
            "t_grid": list(self.t_grid),
            "n_max_moments": self.n_max_moments,
            "probe_degree": self.probe_degree,
            "seed": self.seed,
            "budgets": dict(self.budgets),
            "samples": self.samples,
        }


_KNOWN_KEYS = {"q", "n_fixed", "lambdas", "cutoff", "vectors", "t_grid",
               "n_max_moments", "probe_degree", "seed", "budgets", "samples"}
_REQUIRED_KEYS = ("q", "n_fixed", "lambdas", "cutoff", "vectors")


def _real(raw: dict, key: str) -> float:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"field '{key}': expected a finite number, got {v!r}")
    return float(v)


def _integer(value, where: str, low: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{where}': expected an integer, got {value!r}")
    if low is not None and value < low:
        raise ConfigError(f"field '{where}': must be >= {low}, got {value}")
    return value


def _number_list(value, where: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"field '{where}': expected a list of numbers")
    out = []
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"field '{where}[{i}]': expected a finite number, got {x!r}")
        out.append(float(x))
    return out


def parse_config(raw: Any) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"field '{key}': missing")

    q = _real(raw, "q")
    if not -1.0 < q < 1.0:
        raise ConfigError(f"field 'q': q must lie in (−1,1), got {q}")
    n_fixed = _integer(raw["n_fixed"], "n_fixed", 0)
    lambdas = _number_list(raw["lambdas"], "lambdas")
    for i, lam in enumerate(lambdas):
        if lam <= 1.0:
            raise ConfigError(f"field 'lambdas[{i}]': λ must exceed 1, got {lam}")
    dim = n_fixed + 2 * len(lambdas)
    if dim == 0:
        raise ConfigError("fields 'n_fixed'/'lambdas': representation has dimension 0")
    cutoff = _integer(raw["cutoff"], "cutoff", 1)

    vectors_raw = raw["vectors"]
    if not isinstance(vectors_raw, dict):
        raise ConfigError("field 'vectors': expected an object mapping names to coordinates")
    vectors = {}
    for name, coords in vectors_raw.items():
        v = _number_list(coords, f"vectors.{name}")
        if len(v) != dim:
            raise ConfigError(f"field 'vectors.{name}': expected {dim} real coordinates, got {len(v)}")
        if np.linalg.norm(v) == 0:
            raise ConfigError(f"field 'vectors.{name}': zero vector cannot be normalized")
        vectors[name] = v

    t_grid = _number_list(raw.get("t_grid", [0.0]), "t_grid")
    n_max = _integer(raw.get("n_max_moments", 2), "n_max_moments", 0)
    if n_max % 2:
        raise ConfigError(f"field 'n_max_moments': must be even, got {n_max}")
    limit = min(cutoff, qcomb.PAIRING_GUARD)
    if n_max > limit:
        raise ConfigError(f"field 'n_max_moments': {n_max} exceeds min(cutoff, guard) = {limit}")
    degree = _integer(raw.get("probe_degree", 0), "probe_degree", 0)
    seed = _integer(raw.get("seed", 0), "seed")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"field 'seed': must be a 64-bit unsigned integer, got {seed}")
    samples = _integer(raw.get("samples", 100), "samples", 1)

    budgets = {"words": DEFAULT_WORD_BUDGET, "probe_span": analysis.DEFAULT_PROBE_BUDGET}
    b_raw = raw.get("budgets", {})
    if not isinstance(b_raw, dict):
        raise ConfigError("field 'budgets': expected an object")
    for key, value in b_raw.items():
        if key not in budgets:
            raise ConfigError(f"field 'budgets.{key}': unknown budget")
        budgets[key] = _integer(value, f"budgets.{key}", 1)

    return RunConfig(q=q, n_fixed=n_fixed, lambdas=lambdas, cutoff=cutoff, vectors=vectors,
                     t_grid=t_grid, n_max_moments=n_max, probe_degree=degree, seed=seed,
                     budgets=budgets, samples=samples)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_config(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(config: RunConfig, path) -> None:
    _atomic_write(Path(path), _json_text(config.to_dict()))


# checks and bundle -----------------------------------------------------------

@dataclass
class Check:
    """One tested number. ``kind`` picks the comparison: 'abs' means
    |value - reference| <= tol, 'le' means value <= reference + tol,
    'gt' means value > reference, 'eq' exact equality."""

    name: str
    value: Any
    reference: Any
    tolerance: float
    kind: str = "abs"
    anchor: str = ""

    @property
    def passed(self) -> bool:
        v, r, t = self.value, self.reference, self.tolerance
        if self.kind == "abs":
            return abs(v - r) <= t
        if self.kind == "le":
            return v <= r + t
        if self.kind == "gt":
            return v > r
        if self.kind == "eq":
            return v == r
        raise ValueError(f"unknown check kind {self.kind}")

    def to_dict(self) -> dict:
        out = {"name": self.name, "value": self.value, "reference": self.reference,
               "tolerance": self.tolerance, "comparison": self.kind, "passed": self.passed}
        if self.anchor:
            out["anchor"] = self.anchor
        return out


@dataclass
class ReportBundle:
    subcommand: str
    config: RunConfig
    global_checks: dict = field(default_factory=dict)  # section -> list[Check]
    tables: dict = field(default_factory=dict)  # section -> list[dict]
    vectors: dict = field(default_factory=dict)  # name -> section -> list[Check]

    def all_checks(self):
        for section, checks in self.global_checks.items():
            for c in checks:
                yield f"global.{section}.{c.name}", c
        for name, sections in self.vectors.items():
            for section, checks in sections.items():
                for c in checks:
                    yield f"{name}.{section}.{c.name}", c

    def failures(self) -> list[str]:
        return [path for path, c in self.all_checks() if not c.passed]

    def provenance(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "input_norms": self.config.norms,
            "seed": self.config.seed,
            "subcommand": self.subcommand,
            "versions": {"qfocklab": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "kernel_backend": kernels.BACKEND},
        }

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance(),
            "global": {s: [c.to_dict() for c in cs] for s, cs in self.global_checks.items()},
            "tables": self.tables,
            "vectors": {n: {s: [c.to_dict() for c in cs] for s, cs in secs.items()}
                        for n, secs in self.vectors.items()},
            "summary": {"passed": not self.failures(), "failed": self.failures()},
        }


# stages ----------------------------------------------------------------------

def _stage(name: str):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (BudgetError, OverflowError, analysis.CertificateUnavailable) as exc:
                raise StageError(name, exc) from exc
        return inner
    return wrap


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage


def _level_gram_rows(fock) -> tuple[list[Check], list[dict]]:
    checks, rows = [], []
    for n, g in enumerate(fock.grams):
        lo, hi = g.eigenvalue_range
        checks.append(Check(f"min_eigenvalue_level_{n}", lo, 0.0, 0.0, "gt"))
        rows.append({"level": n, "dim": g.dim, "blocks": g.index.n_blocks,
                     "min_eigenvalue": lo, "max_eigenvalue": hi, "condition": hi / lo})
    return checks, rows


def _gram_oracle_check(fock) -> Check:
    worst = 0.0
    for n in range(1, min(fock.cutoff, GRAM_ORACLE_LEVEL) + 1):
        g = fock.grams[n]
        words = fock.words(n)
        for b in range(g.index.n_blocks):
            members = g.index.block_members(b)
            dense = g.block(b)
            for i, wi in enumerate(members):
                for j, wj in enumerate(members):
                    exact = qcomb.matched_inversion_polynomial(
                        words[wi].tolist(), words[wj].tolist())(fock.q)
                    worst = max(worst, abs(dense[i, j] - exact))
    return Check("gram_vs_inversion_oracle", worst, 0.0, TOL_EXACT)


@_stage("gram")
def _run_gram(config: RunConfig, rep, fock) -> tuple[list[Check], list[dict]]:
    checks, rows = _level_gram_rows(fock)
    checks.append(_gram_oracle_check(fock))
    letters = rep.real_basis()
    interior = range(fock.cutoff)
    worst_adj = worst_comm = 0.0
    for x in letters:
        c, a = creation(fock, x), annihilation(fock, x)
        diff = (gram_adjoint(fock, c) - a).restrict(interior)
        worst_adj = max(worst_adj, diff.frobenius())
        for y in letters:
            worst_comm = max(worst_comm, q_commutation_residual(fock, x, y))
    checks.append(Check("creation_annihilation_adjointness", worst_adj, 0.0, TOL_EXACT))
    checks.append(Check("q_commutation", worst_comm, 0.0, TOL_EXACT))
    return checks, rows


@_stage("moments")
def _run_oracles(config: RunConfig) -> list[Check]:
    checks = []
    for n in range(0, min(config.n_max_moments, 8) + 1, 2):
        fast = qcomb.moment_polynomial(n)
        brute = qcomb.moment_polynomial_bruteforce(n)
        checks.append(Check(f"moment_polynomial_vs_bruteforce_n{n}", fast == brute, True, 0.0,
                            "eq", ANCHOR_MOMENT))
        checks.append(Check(f"catalan_n{n}", int(fast(0)), qcomb.catalan(n // 2), 0.0,
                            "eq", ANCHOR_CATALAN))
    return checks


def _norm_formula_checks(rep, fock) -> list[Check]:
    """Tensor powers of the first real basis letter have squared norm [n]_q!."""
    xi = rep.real_basis()[0]
    checks = []
    for n in range(min(fock.cutoff, 8) + 1):
        value = fock.norm(fock.tensor_power(xi, n)) ** 2
        checks.append(Check(f"tensor_power_norm_n{n}", value, qcomb.q_factorial(n)(fock.q),
                            TOL_STRUCT, anchor=ANCHOR_NORM_FORMULA))
    return checks


@_stage("moments")
def _run_moments(config: RunConfig, fock, xi) -> tuple[list[Check], list[dict]]:
    rows = analysis.moment_report(fock, xi, config.n_max_moments)
    checks, table = [], []
    for r in rows:
        checks.append(Check(f"moment_n{r.n}", r.matrix, r.oracle, r.tol, anchor=ANCHOR_MOMENT))
        table.append({"n": r.n, "matrix": r.matrix, "oracle": r.oracle, "diff": r.diff,
                      "tol": r.tol, "passed": r.passed})
    return checks, table


@_stage("modular")
def _run_modular_global(rep, md) -> list[Check]:
    letters = rep.real_basis()
    checks = [Check("j_involution", j_involution_residual(md), 0.0, TOL_EXACT)]
    worst = 0.0
    for x in letters:
        for y in letters:
            worst = max(worst, commutant_locality_residual(md, x, y))
    checks.append(Check("commutant_locality", worst, 0.0, TOL_STRUCT))
    return checks


@_stage("modular")
def _run_modular(config: RunConfig, fock, md, xi) -> list[Check]:
    checks = []
    for t in config.t_grid:
        checks.append(Check(f"covariance_t={t!r}", covariance_residual(md, xi, t), 0.0,
                            TOL_STRUCT, anchor=ANCHOR_COVARIANCE))
    numeric, closed = delta_quarter_norm(md, xi)
    checks.append(Check("delta_quarter_norm", numeric, closed, TOL_EXACT, anchor=ANCHOR_QUARTER))
    checks.append(Check("s_property_field", s_property_residual(md, field_op(fock, xi)), 0.0,
                        TOL_STRUCT, anchor=ANCHOR_S))
    return checks


@_stage("verdict")
def _run_verdict(config: RunConfig, rep, fock, md, xi, rng) -> tuple[list[Check], dict]:
    r = analysis.split_verdict(rep, config.q, config.cutoff, xi, fock=fock, modular=md,
                               rng=rng, samples=config.samples)
    checks = [
        Check("mu_closed_form", r.mu, r.mu_closed, TOL_EXACT, anchor=ANCHOR_MU),
        Check("verdict_determinate", r.verdict != analysis.VERDICT_INDETERMINATE, True, 0.0, "eq"),
        Check("basis_orthonormality", r.orthonormality_error, 0.0, TOL_STRUCT),
        Check("hermite_basis", r.hermite_error, 0.0, TOL_STRUCT, anchor=ANCHOR_HERMITE),
    ]
    if r.verdict == analysis.VERDICT_FIXED:
        checks.append(Check("mu_fixed", r.mu, 1.0, TOL_EXACT, anchor=ANCHOR_MU))
    if r.verdict == analysis.VERDICT_NONFIXED:
        n = config.cutoff
        checks += [
            Check("hs_partial_vs_closed_minus_tail", r.hs_partial, r.hs_closed - r.tail_bound,
                  TOL_EXACT, anchor=ANCHOR_HS),
            Check("hs_partial_from_coefficients", r.hs_partial_from_coefficients, r.hs_partial,
                  TOL_STRUCT, anchor=ANCHOR_HS),
            Check("hs_partial_below_closed", r.hs_partial, r.hs_closed, 0.0, "le", ANCHOR_HS),
            Check("max_coefficient", r.max_coefficient, 1.0, TOL_EXACT),
            Check("nuclear_partial_vs_closed_minus_tail", r.nuclear_partial,
                  r.nuclear_closed - math.sqrt(r.mu) ** (n + 1) / (1 - math.sqrt(r.mu)),
                  TOL_EXACT, anchor=ANCHOR_NUCLEAR),
            Check("psi_norm", r.psi_norm_max, 1.0, TOL_STRUCT, "le", ANCHOR_PSI),
            Check("psi_cauchy_schwarz", r.cauchy_schwarz_max, 1.0, TOL_STRUCT, "le", ANCHOR_PSI),
        ]
    summary = {
        "verdict": r.verdict,
        "mu": r.mu,
        "mu_closed": r.mu_closed,
        "fixed_residual": r.fixed_residual,
        "hs_partial": r.hs_partial,
        "hs_closed": r.hs_closed,
        "tail_bound": r.tail_bound,
        "nuclear_partial": r.nuclear_partial,
        "nuclear_closed": r.nuclear_closed,
        "coefficients": r.coefficients,
        "notes": list(r.notes),
    }
    return checks, summary


@_stage("probe")
def _run_probe(config: RunConfig, fock, xi) -> tuple[list[Check], dict]:
    res = analysis.commutant_probe(fock, xi, config.probe_degree,
                                   budget=config.budgets["probe_span"])
    # the scalars always commute; nothing beyond that is asserted
    checks = [Check("probe_dimension_at_least_one", res.dimension >= 1, True, 0.0, "eq")]
    info = {"degree": config.probe_degree, "dimension": res.dimension, "residual": res.residual,
            "span": res.span, "safe_level": res.safe_level,
            "null_threshold": analysis.NULL_THRESHOLD, "singular_values": res.singular_values}
    return checks, info


def _vector_job(config: RunConfig, stages: tuple, name: str, index: int) -> dict:
    """Everything for one configured vector; builds its own Fock objects."""
    rep = build(config.spec)
    fock = build_fock(rep, config.q, config.cutoff, word_budget=config.budgets["words"])
    xi = rep.from_real(config.normalized(name))
    rng = np.random.Generator(np.random.Philox(config.seed).jumped(index))
    out: dict = {"checks": {}, "tables": {}}
    md = build_modular(fock) if {"modular", "verdict"} & set(stages) else None
    if "moments" in stages:
        out["checks"]["moments"], out["tables"]["moments"] = _run_moments(config, fock, xi)
    if "modular" in stages:
        out["checks"]["modular"] = _run_modular(config, fock, md, xi)
    if "verdict" in stages:
        out["checks"]["verdict"], out["tables"]["verdict"] = _run_verdict(
            config, rep, fock, md, xi, rng)
    if "probe" in stages:
        out["checks"]["probe"], out["tables"]["probe"] = _run_probe(config, fock, xi)
    return out


def worker_count(n_jobs: int) -> int:
    env = os.environ.get("QFOCKLAB_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"QFOCKLAB_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"QFOCKLAB_THREADS must be >= 1, got {n}")
        return n
    return max(1, min(n_jobs, os.cpu_count() or 1))


def run(config: RunConfig, subcommand: str = "report") -> ReportBundle:
    if subcommand not in STAGES:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    stages = STAGES[subcommand]
    bundle = ReportBundle(subcommand, config)
    rep = build(config.spec)
    try:
        fock = build_fock(rep, config.q, config.cutoff, word_budget=config.budgets["words"])
    except (BudgetError, OverflowError) as exc:
        raise StageError("fock", exc) from exc

    if "gram" in stages:
        bundle.global_checks["gram"], bundle.tables["gram_levels"] = _run_gram(config, rep, fock)
    if "moments" in stages:
        bundle.global_checks["oracles"] = _run_oracles(config) + _norm_formula_checks(rep, fock)
    if "modular" in stages:
        bundle.global_checks["modular"] = _run_modular_global(rep, build_modular(fock))

    names = list(config.vectors)
    if names:
        with ThreadPoolExecutor(max_workers=worker_count(len(names))) as pool:
            results = list(pool.map(lambda a: _vector_job(config, stages, *a),
                                    [(n, i) for i, n in enumerate(names)]))
        # ordered merge
        for name, res in zip(names, results):
            bundle.vectors[name] = res["checks"]
            for section, table in res["tables"].items():
                bundle.tables.setdefault(section, {})[name] = table
    return bundle


# emission --------------------------------------------------------------------

def _clean(obj):
    """Numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _json_text(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(_csv_cell(x) for x in v)
    return str(v)


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(row.get(h)) for h in header])
    return buf.getvalue()


def csv_sections(bundle: ReportBundle) -> dict[str, str]:
    """One CSV document per section, keyed by section name."""
    out = {}
    check_rows = []
    for path, c in bundle.all_checks():
        subject, section = path.split(".")[:2]
        d = c.to_dict()
        check_rows.append({"subject": subject, "section": section, **d})
    out["checks"] = _csv_text(["subject", "section", "name", "value", "reference", "tolerance",
                               "comparison", "passed", "anchor"], check_rows)
    if "gram_levels" in bundle.tables:
        out["gram"] = _csv_text(["level", "dim", "blocks", "min_eigenvalue", "max_eigenvalue",
                                 "condition"], bundle.tables["gram_levels"])
    if "moments" in bundle.tables:
        rows = [{"vector": name, **r} for name, t in bundle.tables["moments"].items() for r in t]
        out["moments"] = _csv_text(["vector", "n", "matrix", "oracle", "diff", "tol", "passed"],
                                   rows)
    if "verdict" in bundle.tables:
        rows, coeff_rows = [], []
        for name, s in bundle.tables["verdict"].items():
            rows.append({"vector": name, **s})
            for m, c in enumerate(s["coefficients"]):
                coeff_rows.append({"vector": name, "m": m, "coefficient": c,
                                   "mu_power": s["mu"] ** (m / 2)})
        out["verdict"] = _csv_text(["vector", "verdict", "mu", "mu_closed", "fixed_residual",
                                    "hs_partial", "hs_closed", "tail_bound", "nuclear_partial",
                                    "nuclear_closed"], rows)
        out["embedding"] = _csv_text(["vector", "m", "coefficient", "mu_power"], coeff_rows)
    if "probe" in bundle.tables:
        rows, sv_rows = [], []
        for name, p in bundle.tables["probe"].items():
            rows.append({"vector": name, **p})
            for i, s in enumerate(p["singular_values"]):
                sv_rows.append({"vector": name, "index": i, "singular_value": s})
        out["probe"] = _csv_text(["vector", "degree", "dimension", "residual", "span",
                                  "safe_level", "null_threshold"], rows)
        out["probe_singular_values"] = _csv_text(["vector", "index", "singular_value"], sv_rows)
    return out


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit(bundle: ReportBundle, fmt: str = "json", path: Optional[str | Path] = None) -> list[Path]:
    """Write the bundle. JSON goes to ``path`` (stdout if None); CSV writes
    ``<stem>_<section>.csv`` next to ``path``. Returns the files written."""
    if fmt == "json":
        text = _json_text(bundle.to_dict())
        if path is None:
            sys.stdout.write(text)
            return []
        _atomic_write(Path(path), text)
        return [Path(path)]
    if fmt == "csv":
        if path is None:
            raise ConfigError("--format csv needs --out")
        base = Path(path)
        stem = base.with_suffix("") if base.suffix else base
        written = []
        for section, text in csv_sections(bundle).items():
            target = stem.parent / f"{stem.name}_{section}.csv"
            _atomic_write(target, text)
            written.append(target)
        return written
    raise ConfigError(f"unknown format {fmt!r}")


# entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qfocklab", description="q-deformed Fock space verification runs")
    p.add_argument("--version", action="version", version=f"qfocklab {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output path (JSON file, or CSV stem)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
        config = load_config(args.config)
        bundle = run(config, args.subcommand)
        emit(bundle, args.format, args.out)
    except ConfigError as exc:
        print(f"qfocklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"qfocklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qfocklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    failed = bundle.failures()
    for name in failed:
        print(f"qfocklab: check failed: {name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
