"""Numeric stability certificate: gain conditions and Lyapunov matrices.

The convergence guarantee for the geometric PID loop rests on two gain
inequalities (an upper bound on the integral gain, a lower bound on the
proportional gain) plus a pair of 3x3 matrices: P_s bounding the Lyapunov
function from below and Q_s bounding its decay rate.  This module evaluates
all of them numerically for a concrete parameter set so a gain choice can be
audited before running anything.

Caveat recorded here because it is easy to trip over: the positive
definiteness of P_s under the stated gain conditions is an asymptotic claim.
Near the corner where k_i approaches its upper bound with kappa near the top
of its admissible range, P_s can lose definiteness even though both gain
inequalities hold with margin.  The report carries the eigenvalues so such
cases are visible rather than silently certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .controller import Gains
from .regularizer import NominalParams


class DerivedConstants(NamedTuple):
    """Inertia-spread delta, interconnection bound mu, admissible kappa interval."""

    delta: float
    mu: float
    kappa_range: tuple[float, float]


def derived_constants(n: NominalParams, k_x: float) -> DerivedConstants:
    """Constants of the gain conditions from believed params and a velocity bound.

    ``k_x`` bounds the actuator velocity magnitude over the certified
    operating region; it scales how strongly the actuator channel can pump
    the error channel, hence the size of mu.  k_x = 0 decouples them
    (mu = 1).
    """
    if not (math.isfinite(k_x) and k_x >= 0.0):
        raise ValueError(f"operating-region velocity bound must be >= 0, got {k_x!r}")
    i_max = n.rolling_inertia
    i_min = n.rolling_inertia - n.inertia_dip
    discriminant = i_max * (i_max * n.pendulum_inertia - n.coupling_amp**2)
    if discriminant <= 0.0:
        raise ValueError(
            "inertia condition violated: "
            f"I_max * (I_max * A - (m_a r l)^2) = {discriminant!r} must be positive"
        )
    mu = 1.0 + n.coupling_amp**2 * k_x / (2.0 * math.sqrt(discriminant))
    delta = 1.0 - i_min / i_max
    return DerivedConstants(delta=delta, mu=mu, kappa_range=(1.0 / mu, 2.0 / mu))


def kappa_mid(constants: DerivedConstants) -> float:
    """Midpoint of the admissible kappa interval, the default working choice."""
    lo, hi = constants.kappa_range
    return 0.5 * (lo + hi)


def gain_thresholds(
    k_d: float, k_i: float, kappa: float, r_const: float
) -> tuple[float, float, float]:
    """The two proportional-gain thresholds and their max with 2*kappa*k_d^2."""
    k_1 = (k_i / (2.0 * k_d)) * (
        math.sqrt(1.0 + 16.0 * r_const * kappa**2 * k_d**2 / k_i) - 1.0
    )
    k_2 = (r_const * k_i**2 / (2.0 * k_d**4)) * (
        1.0
        + math.sqrt(
            1.0
            + 4.0
            * k_d**3
            * (k_i**2 + 4.0 * kappa * k_d**3 * (1.0 + kappa * k_d**3))
            / (r_const * k_i**3)
        )
    )
    return k_1, k_2, max(k_1, k_2, 2.0 * kappa * k_d**2)


def admissible_gain_sample(
    count: int,
    seed: int,
    constants: DerivedConstants,
    kappa: float,
    r_const: float = 1.0,
    k_d_range: tuple[float, float] = (1.0, 10.0),
    k_i_fraction: tuple[float, float] = (0.05, 0.9),
    k_p_margin: tuple[float, float] = (1.05, 3.0),
) -> list[Gains]:
    """Seeded gain triples constructed to satisfy both gain conditions.

    k_d is drawn uniformly, k_i as a fraction of its upper bound, and k_p as
    a multiple of its lower threshold, so every returned triple passes
    check_gains by construction.  The fraction range stays below 1 on
    purpose: right at the k_i bound (with kappa near the top of its range)
    the P_s matrix can lose definiteness even though the inequalities hold,
    see the module docstring.
    """
    rng = np.random.default_rng(seed)
    triples: list[Gains] = []
    for _ in range(count):
        k_d = float(rng.uniform(*k_d_range))
        upper = k_d**3 * (1.0 - constants.delta**2) / constants.mu
        k_i = float(rng.uniform(*k_i_fraction)) * upper
        _, _, floor = gain_thresholds(k_d, k_i, kappa, r_const)
        k_p = float(rng.uniform(*k_p_margin)) * floor
        triples.append(Gains(k_p=k_p, k_d=k_d, k_i=k_i))
    return triples


@dataclass(frozen=True)
class CertificateReport:
    """Audit of one gain set: every constant, threshold, margin and flag.

    Eigenvalue fields are None when the report was built without inertia
    bounds (they are needed to assemble Q_s).  Serialization is stable-order
    key = value text, one field per line.
    """

    k_p: float
    k_d: float
    k_i: float
    delta: float
    mu: float
    kappa: float
    r_const: float
    k_i_upper: float
    k_1: float
    k_2: float
    k_p_floor: float
    k_i_margin: float
    k_p_margin: float
    kappa_ok: bool
    k_i_ok: bool
    k_p_ok: bool
    passed: bool
    p_eigenvalues: Optional[tuple[float, float, float]] = None
    q_eigenvalues: Optional[tuple[float, float, float]] = None
    p_positive_definite: Optional[bool] = None
    q_positive_definite: Optional[bool] = None

    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = " ".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines)


def check_gains(
    g: Gains,
    delta: float,
    mu: float,
    kappa: float,
    r_const: float = 1.0,
    mu_min: Optional[float] = None,
    mu_max: Optional[float] = None,
    alpha: Optional[float] = None,
    theta_bound: float = 1.0,
) -> CertificateReport:
    """Evaluate the two gain inequalities and report margins and flags.

    The symbol r in the k_1/k_2 thresholds is an abstract constant of the
    general theory, not the hoop radius; it is exposed as ``r_const``
    (default 1).  When ``mu_min``/``mu_max`` (inertia bounds over the
    operating region) are supplied, the Lyapunov matrices are evaluated too
    and their eigenvalues included.
    """
    if not (math.isfinite(r_const) and r_const > 0.0):
        raise ValueError(f"r_const must be positive, got {r_const!r}")
    k_p, k_d, k_i = g.k_p, g.k_d, g.k_i

    k_i_upper = k_d**3 * (1.0 - delta**2) / mu
    k_1, k_2, k_p_floor = gain_thresholds(k_d, k_i, kappa, r_const)

    kappa_ok = 1.0 / mu < kappa < 2.0 / mu
    k_i_ok = 0.0 < k_i < k_i_upper
    k_p_ok = k_p > k_p_floor

    p_eigs = q_eigs = None
    p_pd = q_pd = None
    if mu_min is not None and mu_max is not None:
        eigs = lyapunov_matrices(
            g, alpha=alpha, kappa=kappa, theta_bound=theta_bound,
            mu_min=mu_min, mu_max=mu_max,
        )
        p_eigs = tuple(float(v) for v in eigs.p_eigenvalues)
        q_eigs = tuple(float(v) for v in eigs.q_eigenvalues)
        p_pd = eigs.p_positive_definite
        q_pd = eigs.q_positive_definite

    return CertificateReport(
        k_p=k_p, k_d=k_d, k_i=k_i,
        delta=delta, mu=mu, kappa=kappa, r_const=r_const,
        k_i_upper=k_i_upper, k_1=k_1, k_2=k_2, k_p_floor=k_p_floor,
        k_i_margin=k_i_upper - k_i, k_p_margin=k_p - k_p_floor,
        kappa_ok=kappa_ok, k_i_ok=k_i_ok, k_p_ok=k_p_ok,
        passed=kappa_ok and k_i_ok and k_p_ok,
        p_eigenvalues=p_eigs, q_eigenvalues=q_eigs,
        p_positive_definite=p_pd, q_positive_definite=q_pd,
    )


def proof_matrices(
    g: Gains,
    alpha: Optional[float],
    kappa: float,
    theta_bound: float,
    mu_min: float,
    mu_max: float,
    sigma: Optional[float] = None,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the symmetric bound matrices P_s and Q_s.

    The free parameters default to the choices that make the argument work:
    beta = k_i/k_d, sigma = 2 kappa k_i, gamma = k_i (alpha k_d + k_p)/k_d,
    and alpha = k_i/k_d^2.  The alpha default is a deliberate deviation-prone
    choice: it is the unique value annihilating the (2,3) entry of Q_s, which
    maximizes diagonal dominance, but nothing in the theory forces it.  Any
    of the four can be overridden, e.g. zeroing all cross terms makes P_s
    diagonal for sanity checks.
    """
    k_p, k_d, k_i = g.k_p, g.k_d, g.k_i
    if alpha is None:
        alpha = k_i / k_d**2
    if beta is None:
        beta = k_i / k_d
    if sigma is None:
        sigma = 2.0 * kappa * k_i
    if gamma is None:
        gamma = k_i * (alpha * k_d + k_p) / k_d
    if not (math.isfinite(mu_min) and math.isfinite(mu_max) and 0.0 < mu_min <= mu_max):
        raise ValueError(f"need 0 < mu_min <= mu_max, got {mu_min!r}, {mu_max!r}")
    if not (math.isfinite(theta_bound) and theta_bound > 0.0):
        raise ValueError(f"theta_bound must be positive, got {theta_bound!r}")
    delta = 1.0 - mu_min / mu_max

    p_s = np.array(
        [
            [gamma, -sigma, -beta],
            [-sigma, k_p / theta_bound, -alpha],
            [-beta, -alpha, 1.0],
        ]
    )
    q_23 = (k_i - alpha * k_d**2) / (2.0 * k_d)
    q_s = np.array(
        [
            [k_i**2 / k_d, 0.0, -delta * k_i],
            [0.0, alpha * k_p - 2.0 * k_d / mu_max, q_23],
            [-delta * k_i, q_23, k_d - alpha * mu_max],
        ]
    )
    if not (np.isfinite(p_s).all() and np.isfinite(q_s).all()):
        raise ValueError("non-finite entry in Lyapunov matrices")
    return p_s, q_s


class LyapunovEigs(NamedTuple):
    p_eigenvalues: np.ndarray
    q_eigenvalues: np.ndarray
    p_positive_definite: bool
    q_positive_definite: bool


def lyapunov_matrices(
    g: Gains,
    kappa: float,
    mu_min: float,
    mu_max: float,
    alpha: Optional[float] = None,
    theta_bound: float = 1.0,
    sigma: Optional[float] = None,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
) -> LyapunovEigs:
    """Eigenvalues and definiteness flags of the bound matrices P_s and Q_s."""
    p_s, q_s = proof_matrices(
        g, alpha, kappa, theta_bound, mu_min, mu_max,
        sigma=sigma, beta=beta, gamma=gamma,
    )
    p_eigs = np.linalg.eigvalsh(p_s)
    q_eigs = np.linalg.eigvalsh(q_s)
    return LyapunovEigs(
        p_eigenvalues=p_eigs,
        q_eigenvalues=q_eigs,
        p_positive_definite=bool(p_eigs[0] > 0.0),
        q_positive_definite=bool(q_eigs[0] > 0.0),
    )


class MonitorResult(NamedTuple):
    t: list[float]
    w: list[float]
    dw: list[float]
    increase_intervals: list[tuple[float, float]]


def lyapunov_monitor(
    trajectory,
    g: Gains,
    kappa: float,
    alpha: Optional[float] = None,
    z_floor: float = 0.0,
) -> MonitorResult:
    """Evaluate the candidate Lyapunov function along a recorded trajectory.

    ``trajectory`` needs attributes t, o_e, omega_e, o_I (the sim trajectory
    qualifies).  Uses the proof's cross-term weights; the position error
    enters through V = o_e^2/2 and eta = -o_e.  Returns the W time series,
    its per-sample increments, and the merged time intervals where W
    increased while the error norm ||(o_I, o_e, omega_e)|| exceeded
    ``z_floor`` (increases inside the terminal neighborhood are expected and
    not reported).
    """
    k_p, k_d, k_i = g.k_p, g.k_d, g.k_i
    a = k_i / k_d**2 if alpha is None else alpha
    b = k_i / k_d
    s = 2.0 * kappa * k_i
    c = k_i * (a * k_d + k_p) / k_d

    t = list(trajectory.t)
    w: list[float] = []
    z: list[float] = []
    for o_e, omega_e, o_i in zip(trajectory.o_e, trajectory.omega_e, trajectory.o_I):
        eta = -o_e
        w.append(
            k_p * o_e**2 / 2.0
            + omega_e**2 / 2.0
            + c * o_i**2 / 2.0
            + a * eta * omega_e
            + b * o_i * omega_e
            + s * o_i * eta
        )
        z.append(math.sqrt(o_i**2 + o_e**2 + omega_e**2))

    dw = [w1 - w0 for w0, w1 in zip(w, w[1:])]
    intervals: list[tuple[float, float]] = []
    open_start: Optional[float] = None
    for i, d in enumerate(dw):
        rising = d > 0.0 and z[i] > z_floor and z[i + 1] > z_floor
        if rising and open_start is None:
            open_start = t[i]
        elif not rising and open_start is not None:
            intervals.append((open_start, t[i]))
            open_start = None
    if open_start is not None:
        intervals.append((open_start, t[-1]))
    return MonitorResult(t=t, w=w, dw=dw, increase_intervals=intervals)
