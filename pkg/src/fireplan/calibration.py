"""Comparison of model response times against historical incidents: incident
matching, Gamma fits, and the empirical travel-time scale factor."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, polygamma
from scipy.stats import ks_2samp

from .graph import RoadGraph
from .osm import IncidentRecord
from .routing import CombinedField
from .scenario import ScenarioError

INCIDENT_MATCH_M = 100.0

# Fixed histogram binning so plots from different runs line up.
HISTOGRAM_BIN_MIN = 2.0
HISTOGRAM_RANGE_MIN = (0.0, 60.0)


@dataclass(frozen=True)
class MatchedIncident:
    incident: IncidentRecord
    node: int
    model_minutes: float


@dataclass(frozen=True)
class GammaFit:
    shape: float  # k
    scale: float  # theta
    n: int

    @property
    def mean(self) -> float:
        return self.shape * self.scale


class FitError(Exception):
    """Gamma MLE cannot be computed for the given sample."""


def match_incidents(
    incidents: list[IncidentRecord],
    g: RoadGraph,
    baseline: CombinedField,
    max_dist: float = INCIDENT_MATCH_M,
) -> tuple[list[MatchedIncident], int]:
    """Attach the baseline model response time to each incident's nearest
    road node. Incidents farther than max_dist from any node are dropped;
    returns (matched, dropped_count)."""
    matched: list[MatchedIncident] = []
    dropped = 0
    for inc in incidents:
        node = g.nearest_node(inc.pos, max_dist=max_dist)
        if node is None:
            dropped += 1
            continue
        t = baseline.best_time[node]
        if not np.isfinite(t):
            dropped += 1
            continue
        matched.append(MatchedIncident(incident=inc, node=node, model_minutes=float(t / 60.0)))
    return matched, dropped


def fit_gamma(samples: list[float] | np.ndarray, tol: float = 1e-9, max_iter: int = 100) -> GammaFit:
    """Maximum-likelihood Gamma fit.

    The shape solves log(k) - psi(k) = log(mean) - mean(log) by Newton
    iteration; the scale is mean/k. Requires at least two distinct positive
    samples (the MLE diverges for constant data).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise FitError("need at least 2 samples")
    if np.any(x <= 0):
        raise FitError("all samples must be > 0")
    mean = float(x.mean())
    s = math.log(mean) - float(np.log(x).mean())
    if s <= 0:
        raise FitError("zero sample variance; Gamma MLE diverges")

    # Minka's closed-form approximation as the starting point.
    k = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    trace = []
    for _ in range(max_iter):
        f = math.log(k) - float(digamma(k)) - s
        fprime = 1.0 / k - float(polygamma(1, k))
        k_next = k - f / fprime
        if k_next <= 0:
            k_next = k / 2.0
        trace.append(k_next)
        if abs(k_next - k) < tol * max(1.0, abs(k)):
            return GammaFit(shape=k_next, scale=mean / k_next, n=int(x.size))
        k = k_next
    raise FitError(f"Newton iteration did not converge in {max_iter} steps; trace tail {trace[-5:]}")


def estimate_scale_factor(real_minutes: list[float] | np.ndarray, model_minutes: list[float] | np.ndarray) -> float:
    """Ratio of sample means, real over model."""
    real = np.asarray(real_minutes, dtype=np.float64)
    model = np.asarray(model_minutes, dtype=np.float64)
    if real.size == 0 or model.size == 0:
        raise ScenarioError("cannot estimate a scale factor from empty samples")
    return float(real.mean() / model.mean())


def ks_minimizing_factor(
    real_minutes: np.ndarray, model_minutes: np.ndarray, lo: float = 0.5, hi: float = 6.0
) -> float:
    """Diagnostic: the factor minimising the two-sample KS statistic between
    real times and scaled model times (coarse grid, then refinement)."""
    real = np.asarray(real_minutes, dtype=np.float64)
    model = np.asarray(model_minutes, dtype=np.float64)

    def stat(f: float) -> float:
        # asymp: scaled copies share values with the originals, and the
        # exact method refuses ties anyway.
        return float(ks_2samp(real, model * f, method="asymp").statistic)

    grid = np.arange(lo, hi + 1e-9, 0.05)
    best = min(grid, key=stat)
    fine = np.arange(best - 0.05, best + 0.05 + 1e-9, 0.005)
    return float(min(fine, key=stat))


def apply_scale(field: CombinedField, factor: float, scale_delays: bool = False) -> CombinedField:
    """Scale the travel-time component of a combined field.

    Re-minimises over stations, so the result matches evaluating the same
    scenario with time_scale set to the factor. Callout delays are left
    unscaled by default; pass scale_delays=True if the observed times the
    factor was fitted against include alarm handling before departure.
    """
    from .routing import rescale_combined

    return rescale_combined(field, factor, scale_delays=scale_delays)


@dataclass
class CalibrationReport:
    matched: list[MatchedIncident]
    dropped: int
    factor_mean_ratio: float
    factor_gamma_means: float
    factor_ks: float
    real_fit: GammaFit
    model_fit: GammaFit
    scaled_model_fit: GammaFit

    @property
    def matched_count(self) -> int:
        return len(self.matched)


def compare_incidents(
    incidents: list[IncidentRecord],
    g: RoadGraph,
    baseline: CombinedField,
    max_dist: float = INCIDENT_MATCH_M,
) -> CalibrationReport:
    """Full comparison: match incidents, fit Gammas to the real and model
    times, and report the mean-ratio factor with two diagnostics (ratio of
    fitted Gamma means, KS-minimising factor)."""
    matched, dropped = match_incidents(incidents, g, baseline, max_dist)
    if len(matched) < 2:
        raise ScenarioError(f"only {len(matched)} incidents matched; cannot calibrate")
    real = np.array([m.incident.real_response_minutes for m in matched])
    model = np.array([m.model_minutes for m in matched])
    if np.any(model <= 0):
        # Incidents at a station's own node have zero model time; the Gamma
        # fit needs strictly positive values, so nudge them to one second.
        model = np.maximum(model, 1.0 / 60.0)
    factor = estimate_scale_factor(real, model)
    real_fit = fit_gamma(real)
    model_fit = fit_gamma(model)
    scaled_fit = fit_gamma(model * factor)
    return CalibrationReport(
        matched=matched,
        dropped=dropped,
        factor_mean_ratio=factor,
        factor_gamma_means=real_fit.mean / model_fit.mean,
        factor_ks=ks_minimizing_factor(real, model),
        real_fit=real_fit,
        model_fit=model_fit,
        scaled_model_fit=scaled_fit,
    )


def histogram_minutes(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Counts over fixed 2-minute bins spanning 0-60 minutes."""
    edges = np.arange(HISTOGRAM_RANGE_MIN[0], HISTOGRAM_RANGE_MIN[1] + 1e-9, HISTOGRAM_BIN_MIN)
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=edges)
    return counts, edges
