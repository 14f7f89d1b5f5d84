"""Closed-form eigenvalue bounds for the magnetic Robin Laplacian and their verdicts.

Notation: k is the Ricci lower bound, m = ||d alpha||_inf, n the dimension,
tau the Robin parameter and H_min the smallest boundary mean curvature.
"""

from dataclasses import asdict, dataclass, field
from math import sqrt
from typing import List, Optional

import numpy as np

BELOW = "<= a_minus"
GAP = "in forbidden gap"
ABOVE = ">= a_plus"


class BoundsUndefined(ValueError):
    """Negative discriminant: the gap bounds do not exist for these inputs."""


def critical_field(k, n):
    """Largest admissible field strength (1 + 2 sqrt((n-1)/n))^{-1} k."""
    return k / (1.0 + 2.0 * sqrt((n - 1) / n))


def a_plus_minus(k, m, n):
    """Roots (a_minus, a_plus) of (n-1)/n a^2 - (k-m) a + m^2 = 0."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    disc = (k - m) ** 2 - 4.0 * (n - 1) / n * m**2
    if -1e-12 * (k * k + m * m) <= disc < 0:
        disc = 0.0  # rounding at m = critical_field(k, n)
    if disc < 0:
        raise BoundsUndefined(f"discriminant {disc:.3e} < 0 for k={k}, m={m}, n={n}")
    r = sqrt(disc)
    c = n / (2.0 * (n - 1))
    return c * ((k - m) - r), c * ((k - m) + r)


def quadratic_residual(a, k, m, n):
    return (n - 1) / n * a * a - (k - m) * a + m * m


def check_condition3(k, tau, H_min, m, n):
    """Both inequalities k - (n-1) tau H_min <= m <= critical_field(k, n)."""
    return bool(k - (n - 1) * tau * H_min <= m <= critical_field(k, n))


def check_corollary(k, tau, H_min, m, n):
    """Hypotheses under which every eigenvalue lies above a_plus."""
    return bool(k <= (n - 1) * tau * H_min and m <= critical_field(k, n))


def check_ii_tau(II_min, tau):
    """II + tau >= 0 read as positive semidefiniteness of II + tau g on TN."""
    return bool(II_min + tau >= 0)


@dataclass
class Classification:
    value: float
    side: str
    margin_below: float  # a_minus - lambda (>= 0 when below)
    margin_above: float  # lambda - a_plus (>= 0 when above)


def gap_report(eigenvalues, a_minus, a_plus, slack=0.0):
    """Classify each eigenvalue relative to the forbidden interval (a_minus, a_plus).

    ``eigenvalues`` may be an array or a SpectrumResult. An eigenvalue
    counts as inside the gap only if it is more than its ``slack`` (scalar
    or one value per eigenvalue) away from both ends.
    """
    lams = np.asarray(getattr(eigenvalues, "eigenvalues", eigenvalues), dtype=float)
    slacks = np.broadcast_to(np.asarray(slack, dtype=float), lams.shape)
    out = []
    for lam, s in zip(lams, slacks):
        if a_minus + s < lam < a_plus - s:
            side = GAP
        elif lam <= 0.5 * (a_minus + a_plus):
            side = BELOW
        else:
            side = ABOVE
        out.append(Classification(float(lam), side, float(a_minus - lam), float(lam - a_plus)))
    return out


def c_of_tau(f_tau):
    """Ratio min f^2 / max f^2 over the vertex values of a positive ground state."""
    f = np.asarray(f_tau, dtype=float)
    if np.any(f <= 0):
        raise ValueError("ground state must be entrywise positive")
    return float((f.min() / f.max()) ** 2)


@dataclass
class ComparisonVerdict:
    k: int
    robin: float
    lower: float
    upper: float
    margin_lower: float  # robin - lower
    margin_upper: float  # upper - robin
    slack: float
    passed: bool


def comparison_check(lam1_tau, C_tau, neumann, robin, slack):
    """Per-index sandwich lam1 + C lamN_k <= lam_k <= lam1 + lamN_k / C (within slack).

    ``slack`` may be a scalar or one value per index.
    """
    neumann = np.asarray(neumann, dtype=float)
    robin = np.asarray(robin, dtype=float)
    if neumann.shape != robin.shape:
        raise ValueError(f"mismatched spectra: {neumann.shape} vs {robin.shape}")
    slack = np.broadcast_to(np.asarray(slack, dtype=float), robin.shape)
    out = []
    for i, (lN, lR, s) in enumerate(zip(neumann, robin, slack), start=1):
        lo = lam1_tau + C_tau * lN
        hi = lam1_tau + lN / C_tau
        ok = (lR >= lo - s) and (lR <= hi + s)
        out.append(ComparisonVerdict(i, float(lR), float(lo), float(hi), float(lR - lo), float(hi - lR), float(s), bool(ok)))
    return out


def default_slack(previous, current):
    """max(1e-8, 3 |lam_h - lam_{2h}|) per eigenvalue from two consecutive meshes."""
    d = np.abs(np.asarray(current, dtype=float) - np.asarray(previous, dtype=float))
    return np.maximum(1e-8, 3.0 * d)


@dataclass
class BoundReport:
    k: float
    tau: float
    n: int
    m: float
    H_min: float
    II_min: float
    slack: List[float]
    h: Optional[float] = None
    a_minus: Optional[float] = None
    a_plus: Optional[float] = None
    condition3_ok: bool = False
    corollary_ok: bool = False
    ii_tau_ok: bool = False
    classification: List[Classification] = field(default_factory=list)
    gap_ok: Optional[bool] = None
    corollary_verdict: Optional[bool] = None
    C_tau: Optional[float] = None
    comparison: List[ComparisonVerdict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def bound_report(k, tau, n, m, H_min, II_min, eigenvalues, slack, h=None):
    """Evaluate the gap dichotomy and the large-tau lower bound against a spectrum.

    ``slack`` is a scalar or one value per eigenvalue (sorted ascending).
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    slack = np.broadcast_to(np.asarray(slack, dtype=float), eigenvalues.shape)
    rep = BoundReport(k=k, tau=tau, n=n, m=m, H_min=H_min, II_min=II_min, slack=[float(s) for s in slack], h=h)
    rep.condition3_ok = check_condition3(k, tau, H_min, m, n)
    rep.corollary_ok = check_corollary(k, tau, H_min, m, n)
    rep.ii_tau_ok = check_ii_tau(II_min, tau)
    try:
        rep.a_minus, rep.a_plus = a_plus_minus(k, m, n)
    except BoundsUndefined as exc:
        rep.notes.append(str(exc))
        return rep
    rep.classification = gap_report(eigenvalues, rep.a_minus, rep.a_plus, slack)
    if rep.condition3_ok and rep.ii_tau_ok:
        rep.gap_ok = all(c.side != GAP for c in rep.classification)
    else:
        rep.notes.append("hypotheses of the gap dichotomy not met; classification is informational")
    if rep.corollary_ok and rep.ii_tau_ok:
        rep.corollary_verdict = bool(eigenvalues[0] >= rep.a_plus - slack[0])
    sides = sorted({c.side for c in rep.classification})
    rep.notes.append("observed sides: " + ", ".join(sides))
    return rep
