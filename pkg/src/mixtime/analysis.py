"""Per-instance analysis records, CSV output and the linear prediction model."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .chains import canonical_scheme_for, make_chain, theory_bound
from .congestion import bfs_scheme, congestion_bound
from .mixing import DEFAULT_MIXING_CAP, total_mixing_time
from .spectral import spectral_bounds
from .state_graph import DEFAULT_BUILD_CAP, StateGraph, build, graph_stats, loop_reduce

DEFAULT_EPSILON = 1e-3
DEFAULT_CONGESTION_CAP = 2_000
DEFAULT_STATS_CAP = 20_000


@dataclass
class AnalysisRecord:
    instance_id: str
    chain: str
    n_states: int
    n_arcs: int
    avg_degree: float
    avg_loop_prob: float
    pi_min: float
    diameter: int | None = None
    avg_path_length: float | None = None
    lambda2: float | None = None
    lambda_min: float | None = None
    lambda_max_mag: float | None = None
    tau: int | float | None = None
    tau_predicted_flag: bool = False
    lower_spectral: float | None = None
    upper_spectral: float | None = None
    congestion_rho: float | None = None
    congestion_bound: float | None = None
    theory_bound: float | None = None
    epsilon: float = DEFAULT_EPSILON
    scheme: str = ""
    variant: str = "original"

    def sandwich_ok(self, rel_tol: float = 1e-9) -> bool:
        """lower <= tau <= min(upper, congestion) for exact tau (vacuous otherwise)."""
        if self.tau is None or self.tau_predicted_flag:
            return True
        slack = rel_tol * max(1.0, float(self.tau))
        if self.lower_spectral is not None and self.lower_spectral > self.tau + slack:
            return False
        for ub in (self.upper_spectral, self.congestion_bound):
            if ub is not None and self.tau > ub + slack:
                return False
        return True


CSV_COLUMNS = [f.name for f in fields(AnalysisRecord)]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isinf(value):
            return "inf"
        if float(value).is_integer() and abs(value) < 1e15:
            return str(int(value))
        return f"{float(value):.12g}"
    text = str(value)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_header() -> str:
    return ",".join(CSV_COLUMNS) + "\n"


def csv_row(record: AnalysisRecord) -> str:
    values = asdict(record)
    return ",".join(_fmt(values[c]) for c in CSV_COLUMNS) + "\n"


@dataclass
class AnalysisOptions:
    epsilon: float = DEFAULT_EPSILON
    mixing_cap: int = DEFAULT_MIXING_CAP
    build_cap: int = DEFAULT_BUILD_CAP
    congestion_cap: int = DEFAULT_CONGESTION_CAP
    stats_cap: int = DEFAULT_STATS_CAP
    scheme: str = "canonical"
    precision: str = "double"
    threads: int | None = None
    workers: int = 1
    theory: bool = False
    eigensolver: str = "auto"


def analyze_graph(
    g: StateGraph,
    instance_id: str,
    chain_kind: str,
    opts: AnalysisOptions,
    variant: str = "original",
) -> AnalysisRecord:
    """stats -> tau (under the cap) -> spectral -> congestion -> theory bound."""
    eps = opts.epsilon
    stats = graph_stats(g, max_states_for_paths=opts.stats_cap)
    rec = AnalysisRecord(
        instance_id=instance_id,
        chain=chain_kind,
        n_states=stats.n_states,
        n_arcs=stats.n_arcs,
        avg_degree=stats.avg_degree,
        avg_loop_prob=stats.avg_loop_prob,
        pi_min=stats.pi_min,
        diameter=stats.diameter,
        avg_path_length=stats.avg_path_length,
        epsilon=eps,
        variant=variant,
    )
    if g.n_states <= opts.mixing_cap:
        rec.tau = total_mixing_time(
            g, eps, max_states=opts.mixing_cap, precision=opts.precision, threads=opts.threads
        ).tau
    spec = spectral_bounds(g, eps, method=opts.eigensolver)
    rec.lambda2 = spec.lambda2
    rec.lambda_min = spec.lambda_min
    rec.lambda_max_mag = spec.lambda_max_mag
    rec.lower_spectral = spec.lower_bound
    rec.upper_spectral = spec.upper_bound
    if g.n_states <= opts.congestion_cap:
        if opts.scheme == "bfs" or g.chain is None:
            scheme = bfs_scheme()
        else:
            scheme = canonical_scheme_for(g.chain)
        cong = congestion_bound(g, scheme, eps, workers=opts.workers)
        rec.congestion_rho = cong.rho
        rec.congestion_bound = cong.bound
        rec.scheme = scheme.name
    if opts.theory and g.chain is not None and variant == "original":
        rec.theory_bound = theory_bound(g.chain, g.states, eps)
    return rec


def analyze_instance(chain_kind: str, instance, opts: AnalysisOptions) -> tuple[AnalysisRecord, StateGraph]:
    chain = make_chain(chain_kind, instance)
    g = build(chain, max_states=opts.build_cap)
    return analyze_graph(g, chain.instance_id(), chain_kind, opts), g


def analyze_loop_reduced(
    chain_kind: str, instance, opts: AnalysisOptions, fraction: float
) -> tuple[AnalysisRecord, AnalysisRecord]:
    original, g = analyze_instance(chain_kind, instance, opts)
    reduced = loop_reduce(g, fraction)
    rec = analyze_graph(reduced, original.instance_id, chain_kind, opts, variant="reduced")
    return original, rec


# --------------------------------------------------------------------------
# prediction models


@dataclass
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def predict(self, x):
        return self.slope * np.asarray(x, dtype=np.float64) + self.intercept


def fit_linear(x, y) -> LinearFit:
    """Ordinary least squares ``y ~ slope * x + intercept``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError("x and y differ in length")
    if len(x) < 2:
        raise ValueError("a linear fit needs at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return LinearFit(float(slope), float(intercept), r2, len(x))


def fit_loglog(n, tau) -> LinearFit:
    """Power-law exponent: linear fit of log(tau) against log(n)."""
    return fit_linear(np.log(np.asarray(n, dtype=np.float64)), np.log(np.asarray(tau, dtype=np.float64)))


def predict_missing_tau(records: list[AnalysisRecord]) -> LinearFit | None:
    """Fill tau for capped rows from a fit of tau against the lower spectral bound."""
    exact = [r for r in records if r.tau is not None and not r.tau_predicted_flag]
    if len(exact) < 2:
        return None
    fit = fit_linear([r.lower_spectral for r in exact], [r.tau for r in exact])
    for r in records:
        if r.tau is None and r.lower_spectral is not None:
            r.tau = float(fit.predict(r.lower_spectral))
            r.tau_predicted_flag = True
    return fit


def scale_family(family: str, chain_kind: str, n_values, opts: AnalysisOptions):
    """Records for a scaling family plus (tau-vs-lower fit, log-log fit)."""
    from .instances import scaling_family

    records = []
    for n in n_values:
        rec, _ = analyze_instance(chain_kind, scaling_family(family, n), opts)
        records.append(rec)
    tau_fit = predict_missing_tau(records)
    pts = [(n, r.tau) for n, r in zip(n_values, records) if r.tau is not None and r.tau > 0]
    loglog = fit_loglog(*zip(*pts)) if len(pts) >= 2 else None
    return records, tau_fit, loglog
