"""Monte-Carlo NMSE experiment harness.

Runs generate -> subsample -> estimate trials over a grid of snapshot
counts, samplers, and estimation methods, and writes a plot-ready CSV.
Per-trial seeds are derived from the master seed by counter, shared
data realizations are reused across samplers and methods of the same
cell (paired comparisons), and the reduction is order-independent, so
output is byte-identical for a fixed config.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ar as armod
from .design import DesignProblem, check_valid, greedy_design, minimal_sparse_ruler
from .errors import GraphCovError, InvalidInputError, NumericalError
from .estimators import NMSE_FLOOR_DB, NU_REAL, fisher_info, ls_estimate, nnls_estimate, wls_estimate
from .graphs import (
    CIRCULANT_DFT,
    Graph,
    GraphFilter,
    ShiftOperator,
    build_shift,
    cycle_graph,
    frequency_response,
    is_circulant,
    mobius_ladder,
    path_graph,
    sensor_graph,
)
from .models import (
    Subsampler,
    build_psi_ma,
    build_psi_spectral,
    compress_model,
    vandermonde,
    vec,
)
from .stationary import CovarianceMatrix, generate_signals, sample_covariance, true_covariance

ENV_THREADS = "GRAPHCOV_THREADS"
CSV_HEADER = "n_snapshots,method,compression,nmse_db,crb_db,failures"


def make_graph(spec: dict) -> Graph:
    kind = spec.get("kind")
    if kind == "sensor":
        return sensor_graph(spec["n"], spec.get("seed", 0), spec.get("knn", 6))
    if kind == "cycle":
        return cycle_graph(spec["n"])
    if kind == "mobius":
        return mobius_ladder(spec["n"])
    if kind == "path":
        return path_graph(spec["n"])
    if kind == "file":
        path = spec["path"]
        if not os.path.exists(path):
            raise InvalidInputError(f"graph file not found: {path}")
        with open(path) as fh:
            return Graph.from_json(fh.read())
    raise InvalidInputError(f"unknown graph kind {kind!r}")


def make_shift(graph: Graph, kind: str, use_dft: str | bool = "auto") -> ShiftOperator:
    """Build the shift; circulant operators get the closed-form DFT basis."""
    shift = build_shift(graph, kind)
    dft = is_circulant(shift.matrix) if use_dft == "auto" else bool(use_dft)
    if dft:
        return ShiftOperator(shift.matrix, kind=CIRCULANT_DFT)
    return shift


@dataclass
class ExperimentConfig:
    """Declarative description of one NMSE experiment."""

    graph: dict
    shift: str
    signal: dict  # {"kind": "ma", "h": [...]} or {"kind": "ar", "a": [...]}
    model: dict  # {"kind": "spectral"} | {"kind": "ma", "q": Q} | {"kind": "ar", "p": P, ...}
    samplers: list
    methods: list
    n_snapshots: list
    n_trials: int
    seed: int = 0
    exact_covariance: bool = False
    nmse_squared_norm: bool = False
    output: str | None = None

    def __post_init__(self):
        if not self.n_snapshots:
            raise InvalidInputError("snapshot grid must be non-empty")
        if self.n_trials < 1:
            raise InvalidInputError("n_trials must be >= 1")
        if not self.samplers:
            raise InvalidInputError("need at least one sampler")
        if not self.methods:
            raise InvalidInputError("need at least one method")
        if self.model.get("kind") == "ar" and any(m != "ls" for m in self.methods):
            raise InvalidInputError("the autoregressive estimator is least squares only")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed experiment config: {exc}") from exc
        try:
            return cls(**obj)
        except TypeError as exc:
            raise InvalidInputError(f"bad experiment config fields: {exc}") from exc


def n_workers() -> int:
    value = os.environ.get(ENV_THREADS)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise InvalidInputError(f"{ENV_THREADS} must be an integer") from None
    return min(4, os.cpu_count() or 1)


def _resolve_sampler(entry: dict, psi: np.ndarray, n: int) -> Subsampler:
    kind = entry.get("kind")
    if kind == "full":
        return Subsampler.full(n)
    if kind == "explicit":
        return Subsampler(n, tuple(entry["selected"]))
    if kind == "greedy":
        k = int(entry["k"])
        if k > n:
            raise InvalidInputError(f"sampler budget {k} exceeds N={n}")
        problem = DesignProblem(
            psi=psi, k=k, epsilon=entry.get("epsilon"), cost=entry.get("cost", "logdet")
        )
        return greedy_design(problem).sampler
    if kind == "ruler":
        marks = entry.get("marks")
        if marks is None:
            marks = minimal_sparse_ruler(n)
        return Subsampler(n, tuple(marks))
    raise InvalidInputError(f"unknown sampler kind {kind!r}")


class _Pipeline:
    """Precomputed, immutable state shared by all trials of one experiment."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.graph = make_graph(config.graph)
        self.shift = make_shift(self.graph, config.shift)
        self.basis = self.shift.basis()
        n = self.shift.n

        sig = config.signal
        if sig.get("kind") == "ma":
            self.filt = GraphFilter(np.asarray(sig["h"], dtype=float))
            self.ar_coeffs = None
            self.true_p = np.abs(frequency_response(self.basis.eigvals, self.filt)) ** 2
            self.true_cov = true_covariance(self.shift, self.filt).matrix
        elif sig.get("kind") == "ar":
            self.filt = None
            self.ar_coeffs = np.asarray(sig["a"], dtype=float)
            self.true_p = armod.ar_power_spectrum(self.basis.eigvals, self.ar_coeffs)
            self.true_cov = armod.true_ar_covariance(self.shift, self.ar_coeffs).matrix
        else:
            raise InvalidInputError("signal kind must be 'ma' or 'ar'")

        model = config.model
        self.model_kind = model.get("kind")
        if self.model_kind == "spectral":
            self.psi = build_psi_spectral(self.basis)
            self.vand = None
        elif self.model_kind == "ma":
            self.q = int(model["q"])
            self.psi = build_psi_ma(self.shift, self.q)
            self.vand = vandermonde(self.basis.eigvals, self.q)
        elif self.model_kind == "ar":
            self.psi = None
            self.vand = None
            self.p_order = int(model["p"])
        else:
            raise InvalidInputError(f"unknown model kind {self.model_kind!r}")

        self.cells = []  # (name, compression, compressed model or AR scheme)
        for entry in config.samplers:
            if self.model_kind == "ar":
                if entry.get("kind", "ar-core") != "ar-core":
                    raise InvalidInputError(
                        "the autoregressive model samples cores plus neighborhoods; "
                        f"use sampler kind 'ar-core', not {entry.get('kind')!r}"
                    )
                core = entry.get("core") or armod.core_by_degree(
                    self.graph, entry.get("k0", 1)
                )
                scheme = armod.build_ar_scheme(self.shift, core, self.p_order)
                compression = 1.0 - len(scheme.distinct_nodes) / n
                name = entry.get("name", f"ar-core-{len(scheme.core)}")
                self.cells.append((name, compression, scheme))
            else:
                sampler = _resolve_sampler(entry, self.psi, n)
                report = check_valid(self.psi, sampler)
                if not report.valid:
                    raise InvalidInputError(
                        f"sampler {entry!r} is not a valid covariance subsampler "
                        f"(rank {report.rank} of {self.psi.shape[1]})"
                    )
                compression = 1.0 - sampler.k / n
                name = entry.get("name", f"k{sampler.k}")
                self.cells.append(
                    (name, compression, (sampler, compress_model(self.psi, sampler)))
                )

    # -- per-trial work ---------------------------------------------------

    def generate(self, n_snapshots: int, seed) -> np.ndarray:
        if self.ar_coeffs is not None:
            return armod.generate_ar_signals(self.shift, self.ar_coeffs, n_snapshots, seed)
        return generate_signals(self.shift, self.filt, n_snapshots, seed)

    def reconstruct(self, theta: np.ndarray) -> np.ndarray:
        if self.model_kind == "spectral":
            return theta
        if self.model_kind == "ma":
            return self.vand @ theta
        return armod.ar_power_spectrum(self.basis.eigvals, theta)

    def estimate_cell(self, cell, method: str, data: np.ndarray | None):
        """Squared spectrum error of one (cell, method) estimate; data=None for exact mode."""
        _, _, payload = cell
        if self.model_kind == "ar":
            scheme = payload
            if data is None:
                blocks = armod.true_ar_covariances(scheme, self.true_cov)
            else:
                blocks = armod.sample_ar_covariances(scheme, data)
            model, r_y = armod.build_ar_model(self.shift, scheme, blocks)
            theta = armod.estimate_ar(model, r_y).theta
        else:
            sampler, model = payload
            if data is None:
                r_y = vec(self.true_cov[np.ix_(sampler.selected, sampler.selected)])
                cov = None
            else:
                cov = sample_covariance(data[list(sampler.selected)])
                r_y = vec(cov.matrix)
            if method == "ls":
                theta = ls_estimate(model, r_y).theta
            elif method == "nnls":
                theta = nnls_estimate(model, r_y).theta
            elif method == "wls":
                if cov is None:
                    theta = ls_estimate(model, r_y).theta
                else:
                    theta = wls_estimate(model, r_y, cov, nu=NU_REAL).theta
            else:
                raise InvalidInputError(f"unknown method {method!r}")
        p_hat = self.reconstruct(theta)
        err = p_hat - self.true_p
        return float(err @ err)

    def crb_db(self, cell, n_snapshots: int) -> float | None:
        """CRB at the true parameters, mapped to the NMSE scale; None when unavailable."""
        if self.model_kind == "ar":
            return None
        sampler, model = cell[2]
        r_true = self.true_cov[np.ix_(sampler.selected, sampler.selected)]
        try:
            info = fisher_info(
                model, CovarianceMatrix(r_true, kind="true"), n_snapshots, nu=NU_REAL
            )
        except NumericalError:
            return None
        if self.model_kind == "ma":
            cov_p = self.vand @ info.crb @ self.vand.T
        else:
            cov_p = info.crb
        expected_sse = float(np.trace(cov_p))
        norm = float(np.linalg.norm(self.true_p))
        denom = norm**2 if self.config.nmse_squared_norm else norm
        ratio = expected_sse / denom
        if ratio <= 0:
            return NMSE_FLOOR_DB
        return float(max(10.0 * np.log10(ratio), NMSE_FLOOR_DB))


def _nmse_db(sse: float, count: int, norm: float, squared: bool) -> float:
    denom = count * (norm**2 if squared else norm)
    ratio = sse / denom
    if ratio <= 10.0 ** (NMSE_FLOOR_DB / 10.0):
        return NMSE_FLOOR_DB
    return float(max(10.0 * np.log10(ratio), NMSE_FLOOR_DB))


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Run all cells and return one result row per (n_snapshots, sampler, method)."""
    pipe = _Pipeline(config)
    norm = float(np.linalg.norm(pipe.true_p))
    n_cells = len(pipe.cells)
    n_methods = len(config.methods)
    rows = []
    for ns_idx, ns in enumerate(config.n_snapshots):
        if ns < 1:
            raise InvalidInputError("snapshot counts must be >= 1")
        # sqerr[cell][method][trial]; NaN marks a failed estimation
        sqerr = np.full((n_cells, n_methods, config.n_trials), np.nan)

        def run_trial(trial: int, ns=ns, ns_idx=ns_idx, sqerr=sqerr):
            if config.exact_covariance:
                data = None
            else:
                seed = np.random.SeedSequence((config.seed, ns_idx, trial))
                data = pipe.generate(ns, seed)
            for c_idx, cell in enumerate(pipe.cells):
                for m_idx, method in enumerate(config.methods):
                    try:
                        sqerr[c_idx, m_idx, trial] = pipe.estimate_cell(cell, method, data)
                    except (GraphCovError, np.linalg.LinAlgError):
                        pass  # failure recorded as NaN

        workers = n_workers()
        if workers > 1 and config.n_trials > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run_trial, range(config.n_trials)))
        else:
            for trial in range(config.n_trials):
                run_trial(trial)

        for c_idx, cell in enumerate(pipe.cells):
            crb = pipe.crb_db(cell, ns)
            for m_idx, method in enumerate(config.methods):
                values = sqerr[c_idx, m_idx]
                good = values[~np.isnan(values)]
                failures = int(np.isnan(values).sum())
                nmse_db = (
                    _nmse_db(float(good.sum()), good.size, norm, config.nmse_squared_norm)
                    if good.size
                    else None
                )
                rows.append(
                    {
                        "n_snapshots": ns,
                        "method": method,
                        "sampler": cell[0],
                        "compression": cell[1],
                        "nmse_db": nmse_db,
                        "crb_db": crb,
                        "failures": failures,
                    }
                )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        nmse_db = "" if row["nmse_db"] is None else repr(row["nmse_db"])
        crb_db = "" if row["crb_db"] is None else repr(row["crb_db"])
        lines.append(
            f"{row['n_snapshots']},{row['method']},{row['compression']!r},{nmse_db},{crb_db},{row['failures']}"
        )
    return "\n".join(lines) + "\n"
