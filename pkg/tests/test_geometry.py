"""Connection and metric-compatibility checks for the inertia geometry."""
import math

import numpy as np
import pytest

from hooprobot.geometry import (
    InertiaField,
    christoffel,
    cos_squared_field,
    covariant_derivative,
    metricity_residual,
)

# base 2, dip 0.5 gives hand-checkable values: I(pi/4) = 1.75, I'(pi/4) = 0.5,
# so Gamma(pi/4) = 0.5 / 3.5 = 1/7 and I*Gamma = 0.25 exactly.
FIELD = cos_squared_field(2.0, 0.5)


def test_cos_squared_field_values():
    assert FIELD.evaluate(0.0) == pytest.approx(1.5)
    assert FIELD.evaluate(math.pi / 2) == pytest.approx(2.0)
    assert FIELD.evaluate(math.pi / 4) == pytest.approx(1.75)
    assert FIELD.derivative(math.pi / 4) == pytest.approx(0.5)


def test_cos_squared_field_requires_positive_profile():
    with pytest.raises(ValueError, match="not positive"):
        cos_squared_field(1.0, 1.5)
    with pytest.raises(ValueError, match="not positive"):
        cos_squared_field(1.0, 1.0)  # touching zero is degenerate too


def test_christoffel_hand_value():
    assert christoffel(FIELD, math.pi / 4) == pytest.approx(1.0 / 7.0, rel=1e-14)


def test_christoffel_vanishes_at_profile_extrema():
    assert christoffel(FIELD, 0.0) == 0.0
    assert abs(christoffel(FIELD, math.pi / 2)) < 1e-15


def test_christoffel_matches_log_derivative():
    # Gamma = (d/dq log I) / 2, checked against a finite difference of the
    # evaluate callable only (never the stored derivative).
    h = 1e-5
    for q in np.linspace(-math.pi, math.pi, 61):
        fd = (math.log(FIELD.evaluate(q + h)) - math.log(FIELD.evaluate(q - h))) / (4.0 * h)
        assert christoffel(FIELD, q) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_christoffel_periodic():
    rng = np.random.default_rng(11)
    for _ in range(50):
        q = float(rng.uniform(-10.0, 10.0))
        assert christoffel(FIELD, q + 2.0 * math.pi) == pytest.approx(
            christoffel(FIELD, q), rel=1e-12, abs=1e-14
        )


def test_christoffel_rejects_non_finite_angle():
    with pytest.raises(ValueError, match="finite"):
        christoffel(FIELD, math.inf)
    with pytest.raises(ValueError, match="finite"):
        christoffel(FIELD, math.nan)


def test_christoffel_rejects_degenerate_metric():
    bad = InertiaField(evaluate=lambda q: -1.0, derivative=lambda q: 0.0)
    with pytest.raises(ValueError, match="positive"):
        christoffel(bad, 0.3)


def test_covariant_derivative_hand_value():
    # I*Gamma at pi/4 is exactly 1.75/7 = 0.25
    assert covariant_derivative(FIELD, math.pi / 4, 1.0, 0.0, 1.0) == pytest.approx(
        0.25, rel=1e-14
    )


def test_covariant_derivative_plain_rate_term():
    # zeta = 0 leaves only I * eta_dot
    q = 0.8
    assert covariant_derivative(FIELD, q, 0.0, 2.0, 5.0) == pytest.approx(
        2.0 * FIELD.evaluate(q), rel=1e-14
    )


def test_covariant_derivative_constant_field_is_flat():
    flat = InertiaField(evaluate=lambda q: 3.0, derivative=lambda q: 0.0)
    rng = np.random.default_rng(5)
    for _ in range(20):
        q, z, ed, e = rng.uniform(-4, 4, size=4)
        assert covariant_derivative(flat, q, z, ed, e) == pytest.approx(3.0 * ed)


def test_connection_term_bilinear():
    rng = np.random.default_rng(23)
    for _ in range(50):
        q = float(rng.uniform(-math.pi, math.pi))
        z = float(rng.uniform(-3, 3))
        e = float(rng.uniform(-3, 3))
        conn = covariant_derivative(FIELD, q, z, 0.0, e)
        assert covariant_derivative(FIELD, q, 2.0 * z, 0.0, e) == pytest.approx(
            2.0 * conn, rel=1e-12, abs=1e-13
        )
        assert covariant_derivative(FIELD, q, z, 0.0, 2.0 * e) == pytest.approx(
            2.0 * conn, rel=1e-12, abs=1e-13
        )


def test_metricity_residual_zero_on_random_samples():
    # Metric compatibility of the connection: the product-rule defect is
    # analytically zero for arbitrary (not just dynamically consistent) samples.
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        sample = (
            float(rng.uniform(-math.pi, math.pi)),
            float(rng.uniform(-5, 5)),
            float(rng.uniform(-3, 3)),
            float(rng.uniform(-3, 3)),
            float(rng.uniform(-3, 3)),
            float(rng.uniform(-3, 3)),
        )
        worst = max(worst, metricity_residual(FIELD, sample))
    assert worst < 1e-10


def test_metricity_residual_trivial_sample():
    assert metricity_residual(FIELD, (0.4, 0.0, 1.0, 0.0, 1.0, 0.0)) == 0.0
