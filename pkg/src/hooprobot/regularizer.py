"""Inner-loop feedback regularization computed from believed parameters.

The raw reduced dynamics are not a mechanical system in the tracking error:
the actuator's centrifugal term and the angle-dependent gravity coupling
spoil the structure.  The regularizing transformation cancels exactly those
pieces and adds a flat-ground potential-shaping torque, so that what remains
is the covariant error equation

    I(theta_a) * covariant_rate(omega_e)  =  residual + pid_torque

where the residual lumps gravity on the (unknown) incline, disturbances and
parameter mismatch, and is constant at a steady configuration.  The outer
PID loop then only has to fight a constant.

Everything here uses the controller's nominal parameter set, which may be
badly wrong; the mismatch lands in the residual by design.

Note on the velocity-quadratic term: the transformation must cancel the
plant's centrifugal torque -m_a r l sin(theta_a) omega_a^2, so the control
adds that amount back with a positive sign.  Flipping it (injecting the
term a second time instead of cancelling it) destroys the covariant form
and destabilizes the loop; the closed-form residual check in the test
suite pins the sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import InertiaField, cos_squared_field
from .plant import PlantParams, SingularCouplingError


@dataclass(frozen=True)
class NominalParams:
    """Parameters the controller believes, with the incline deliberately absent.

    Unlike the true plant there is no l < r constraint: a 50% overestimate of
    the arm can exceed the (known) hoop radius and the controller must still
    function.  The reduced-inertia positivity constraint is kept because the
    control law divides by the believed inertia.
    """

    m_h: float
    i_h: float
    r: float
    m_a: float
    i_a: float
    l: float
    g: float = 9.81

    m_total: float = field(init=False, repr=False)
    pendulum_inertia: float = field(init=False, repr=False)
    rolling_inertia: float = field(init=False, repr=False)
    inertia_dip: float = field(init=False, repr=False)
    coupling_amp: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("m_h", "i_h", "r", "m_a", "i_a", "l"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")
        if not (math.isfinite(self.g) and self.g >= 0.0):
            raise ValueError(f"g must be finite and non-negative, got {self.g!r}")
        m_total = self.m_h + self.m_a
        pend = self.i_a + self.m_a * self.l**2
        rolling = self.i_h + m_total * self.r**2
        amp = self.m_a * self.r * self.l
        dip = amp**2 / pend
        if not rolling > dip:
            raise ValueError(
                f"believed inertia not positive: i_h + M r^2 = {rolling!r} "
                f"must exceed (m_a r l)^2/(i_a + m_a l^2) = {dip!r}"
            )
        object.__setattr__(self, "m_total", m_total)
        object.__setattr__(self, "pendulum_inertia", pend)
        object.__setattr__(self, "rolling_inertia", rolling)
        object.__setattr__(self, "inertia_dip", dip)
        object.__setattr__(self, "coupling_amp", amp)

    def inertia(self, theta_a: float) -> float:
        """Believed reduced inertia at actuator angle theta_a."""
        return self.rolling_inertia - self.inertia_dip * math.cos(theta_a) ** 2


def nominal_from_true(p: PlantParams, factor: float = 1.5) -> NominalParams:
    """Mismatched belief: scale each mass property of ``p`` by ``factor``.

    The hoop radius and gravity are treated as known (directly measurable),
    so only m_h, i_h, m_a, i_a and l are scaled.  factor = 1.5 reproduces a
    50% parameter error on every scaled quantity.
    """
    if not (math.isfinite(factor) and factor > 0.0):
        raise ValueError(f"mismatch factor must be finite and positive, got {factor!r}")
    return NominalParams(
        m_h=factor * p.m_h,
        i_h=factor * p.i_h,
        r=p.r,
        m_a=factor * p.m_a,
        i_a=factor * p.i_a,
        l=factor * p.l,
        g=p.g,
    )


def nominal_inertia_field(n: NominalParams) -> InertiaField:
    """Believed inertia profile as a geometric field (for connection terms)."""
    return cos_squared_field(n.rolling_inertia, n.inertia_dip)


def shaping_torque(n: NominalParams, theta_a: float) -> float:
    """Flat-ground potential-shaping torque S(theta_a).

    This is the torque that, added to the input, makes the believed zero-incline
    gravity coupling on the spin channel vanish; equivalently it reshapes the
    closed-loop potential so the spin equation sees no angle-dependent gravity.
    """
    coeff = n.m_a**2 * n.r * n.l**2 * n.g / (2.0 * n.pendulum_inertia)
    return coeff * math.sin(2.0 * theta_a)


def regularize(
    n: NominalParams,
    theta_a: float,
    omega_a: float,
    omega_e: float,
    tilde_tau_u: float,
) -> float:
    """Total input torque: cancellation terms plus the outer-loop torque.

    Three pieces are added to ``tilde_tau_u``: the connection correction
    -I*Gamma*omega_a*omega_e that turns the plain acceleration into a
    covariant one, the cancellation of the actuator centrifugal torque, and
    the flat-ground potential shaping.  All coefficients come from the
    believed parameters.
    """
    sin_a = math.sin(theta_a)
    sin_2a = 2.0 * sin_a * math.cos(theta_a)
    connection = (
        n.coupling_amp**2 * sin_2a / (2.0 * n.pendulum_inertia)
    ) * omega_a * omega_e
    centrifugal = n.coupling_amp * sin_a * omega_a**2
    return -connection + centrifugal + shaping_torque(n, theta_a) + tilde_tau_u


def regularized_actuator_terms(
    n: NominalParams,
    theta_a: float,
    omega_a: float,
    omega_e: float,
) -> tuple[float, float]:
    """Actuator-channel bookkeeping after regularization, under believed params.

    Returns the shaped actuator gravity torque (believed zero-incline gravity
    torque plus the shaping torque routed through the coupling gain) and the
    bilinear interconnection torque, which vanishes when the tracking-velocity
    error is zero.  Used by equilibrium and boundedness analyses, not by the
    control loop itself.
    """
    sin_a = math.sin(theta_a)
    cos_a = math.cos(theta_a)
    inertia = n.inertia(theta_a)
    coupling = n.coupling_amp * cos_a
    denom = n.pendulum_inertia - coupling
    if abs(denom) < 1e-12:
        raise SingularCouplingError(
            f"believed input coupling singular at theta_a={theta_a!r}"
        )
    gain = coupling / n.pendulum_inertia - inertia / denom

    shaping = shaping_torque(n, theta_a)
    # believed gravity torques at zero incline
    tau_spin_flat = -shaping  # -(m_a^2 r l^2 g / A) cos sin = -S
    tau_act_flat = (
        coupling / n.pendulum_inertia
    ) * tau_spin_flat - inertia * n.m_a * n.g * n.l * sin_a / n.pendulum_inertia

    shaped_gravity = tau_act_flat + gain * shaping
    interconnection = (
        -gain
        * (n.coupling_amp**2 * 2.0 * sin_a * cos_a / (2.0 * n.pendulum_inertia))
        * omega_a
        * omega_e
    )
    return shaped_gravity, interconnection
