"""Linear-systems view of the second-moment dynamic: transfer function,
pole/zero locations, state-transition entries, and time responses.

Root-finding is closed form (degree <= 2) so results are bit-reproducible;
no general polynomial root-finder is used at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ValidationError


class DegreeError(ValueError):
    """Polynomial degree outside the supported closed-form range."""


@dataclass(frozen=True)
class RationalTF:
    """Proper rational transfer function with a monic denominator.

    Coefficients are in descending degree. Construction normalizes the
    denominator to be monic and rejects improper fractions.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        den = np.atleast_1d(np.asarray(self.den, dtype=float))
        if den[0] == 0.0:
            raise ValueError("leading denominator coefficient must be nonzero")
        if len(num) > len(den):
            raise ValueError("transfer function must be proper (num degree <= den degree)")
        num = num / den[0]
        den = den / den[0]
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)


def adamssm_tf(b2: float, b3: float) -> RationalTF:
    """Transfer function from the squared-gradient input to the second moment
    for the two-state dynamic with rates (b2, b3):

        b2 * (s + b2) / (s^2 + (2*b2 + b3)*s + b2^2)

    At b3 = 0 the pole-zero pair at s = -b2 cancels and the map reduces to the
    one-state low-pass b2 / (s + b2).
    """
    if not b2 > 0:
        raise ValidationError(["0 < b2"])
    if not b3 >= 0:
        raise ValidationError(["b3 >= 0"])
    return RationalTF(
        num=np.array([b2, b2 * b2]),
        den=np.array([1.0, 2.0 * b2 + b3, b2 * b2]),
    )


def dc_gain(tf: RationalTF) -> float:
    """Zero-frequency gain num(0)/den(0), evaluated in coefficient arithmetic."""
    if tf.den[-1] == 0.0:
        raise ZeroDivisionError("pole at s = 0, DC gain undefined")
    return float(tf.num[-1] / tf.den[-1])


def _roots_closed_form(coeffs: np.ndarray) -> list[complex]:
    """Roots of a real polynomial of degree <= 2, in closed form.

    Uses the numerically stable quadratic formula (no subtraction of nearly
    equal quantities). Raises DegreeError above degree 2.
    """
    c = np.trim_zeros(np.atleast_1d(np.asarray(coeffs, dtype=float)), "f")
    deg = len(c) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [complex(-c[1] / c[0])]
    if deg == 2:
        a, b, c0 = float(c[0]), float(c[1]), float(c[2])
        disc = b * b - 4.0 * a * c0
        if disc >= 0.0:
            sq = math.sqrt(disc)
            q = -0.5 * (b + math.copysign(sq, b))
            if q == 0.0:
                # b == 0 and disc == 0, double root at the origin
                return [complex(0.0), complex(0.0)]
            return [complex(q / a), complex(c0 / q)]
        re = -b / (2.0 * a)
        im = math.sqrt(-disc) / (2.0 * a)
        return [complex(re, im), complex(re, -im)]
    raise DegreeError(f"closed-form roots support degree <= 2, got {deg}")


def _sorted_roots(roots: list[complex]) -> list[complex]:
    return sorted(roots, key=lambda z: (z.real, z.imag))


def poles_zeros(tf: RationalTF) -> tuple[list[complex], list[complex]]:
    """Exact closed-form poles and zeros, each sorted by real part."""
    return _sorted_roots(_roots_closed_form(tf.den)), _sorted_roots(_roots_closed_form(tf.num))


@dataclass(frozen=True)
class SecondMomentLTI:
    """Two-state linear dynamic (zeta, nu) with state matrix
    [[-lambda3, lambda3], [lambda4, -lambda5]]."""

    lambda3: float
    lambda4: float
    lambda5: float

    def __post_init__(self):
        v = []
        if not self.lambda3 > 0:
            v.append("lambda3 > 0")
        if not self.lambda4 >= 0:
            v.append("lambda4 >= 0")
        if v:
            raise ValidationError(v)

    @property
    def A(self) -> np.ndarray:
        return np.array([[-self.lambda3, self.lambda3],
                         [self.lambda4, -self.lambda5]])


def stability_quantity_p(lti: SecondMomentLTI) -> float:
    """Mode-separation quantity sqrt((lambda3 - lambda5)^2 + 4*lambda3*lambda4).

    Always >= |lambda3 - lambda5|, and <= lambda3 + lambda5 when
    lambda5 >= lambda4, which keeps the transition entries bounded.
    """
    d = lti.lambda3 - lti.lambda5
    return math.sqrt(d * d + 4.0 * lti.lambda3 * lti.lambda4)


def _transition_terms(lti: SecondMomentLTI, t):
    """Shared exponential terms of the state-transition matrix.

    Returns (e_plus, e_minus, p, a) with e_plus = exp((p-a)t/2) and
    e_minus = exp(-(p+a)t/2), a = lambda3 + lambda5. Exponents are combined
    before exponentiation so large t cannot overflow when p <= a.
    """
    t = np.asarray(t, dtype=float)
    a = lti.lambda3 + lti.lambda5
    p = stability_quantity_p(lti)
    e_plus = np.exp(0.5 * (p - a) * t)
    e_minus = np.exp(-0.5 * (p + a) * t)
    return e_plus, e_minus, p, a


def state_transition_entries(lti: SecondMomentLTI, t):
    """Entries phi12(t) and phi22(t) of the state-transition matrix exp(A t).

    phi12(t) = lambda3 * e^{-(lambda3+lambda5)t/2} * (e^{pt/2} - e^{-pt/2}) / p
    phi22(t) = e^{-(lambda3+lambda5)t/2}
               * (e^{pt/2}(p - lambda5 + lambda3) + e^{-pt/2}(p + lambda5 - lambda3)) / (2p)

    The repeated-mode case p = 0 (only reachable with lambda4 = 0 and
    lambda3 = lambda5) uses the confluent limit forms. t may be a scalar or an
    array; entries are returned with t's shape.
    """
    t_arr = np.asarray(t, dtype=float)
    l3, l5 = lti.lambda3, lti.lambda5
    p = stability_quantity_p(lti)
    if p == 0.0:
        a = l3 + l5
        decay = np.exp(-0.5 * a * t_arr)
        phi12 = l3 * t_arr * decay
        phi22 = decay * (1.0 + 0.5 * (l3 - l5) * t_arr)
        return phi12, phi22
    e_plus, e_minus, p, _ = _transition_terms(lti, t_arr)
    phi12 = l3 * (e_plus - e_minus) / p
    phi22 = (e_plus * (p - l5 + l3) + e_minus * (p + l5 - l3)) / (2.0 * p)
    return phi12, phi22


def state_transition_matrix(lti: SecondMomentLTI, t: float) -> np.ndarray:
    """Full 2x2 state-transition matrix exp(A t) in closed form."""
    l3, l4, l5 = lti.lambda3, lti.lambda4, lti.lambda5
    p = stability_quantity_p(lti)
    t = float(t)
    if p == 0.0:
        a = l3 + l5
        decay = math.exp(-0.5 * a * t)
        # exp(At) = e^{-at/2} (I + t (A + (a/2) I)) for a repeated mode
        return decay * (np.eye(2) + t * (lti.A + 0.5 * a * np.eye(2)))
    e_plus, e_minus, p, _ = _transition_terms(lti, t)
    phi11 = (e_plus * (p + l5 - l3) + e_minus * (p - l5 + l3)) / (2.0 * p)
    phi12 = l3 * (e_plus - e_minus) / p
    phi21 = l4 * (e_plus - e_minus) / p
    phi22 = (e_plus * (p - l5 + l3) + e_minus * (p + l5 - l3)) / (2.0 * p)
    return np.array([[phi11, phi12], [phi21, phi22]])


def second_moment_response(
    lti: SecondMomentLTI,
    input_gain: float,
    input_series,
    dt: float,
    nu_init: float = 0.0,
    lower_index: int = 0,
) -> np.ndarray:
    """Second-moment trajectory from its convolution solution on a uniform grid.

    Computes nu(t_k) = phi22(t_k - t_j) * nu_init
                       + input_gain * integral_{t_j}^{t_k} phi22(t_k - s) u(s) ds
    for k >= lower_index = j, with the integral accumulated by the trapezoid
    rule on the grid. Entries before lower_index are NaN (the solution is
    anchored at t_j and zeta is assumed zero there).

    Parameters
    ----------
    input_gain : gain multiplying the input series (the second-moment input
        gain of the optimizer, e.g. b2 for the adam family).
    input_series : input samples on the uniform grid with spacing dt.
    nu_init : second-moment value at the anchor index.
    lower_index : grid index where the solution is anchored.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = np.asarray(input_series, dtype=float)
    if u.ndim != 1:
        raise ValueError("input_series must be one-dimensional")
    n = len(u)
    if not 0 <= lower_index < n:
        raise ValueError(f"lower_index {lower_index} outside grid of length {n}")
    m = n - lower_index
    _, phi22 = state_transition_entries(lti, np.arange(m) * dt)
    seg = u[lower_index:]
    conv = np.convolve(phi22, seg)[:m]
    # trapezoid rule: halve the two endpoint contributions of each prefix sum
    trap = conv - 0.5 * (phi22 * seg[0] + phi22[0] * seg)
    out = np.full(n, np.nan)
    out[lower_index:] = phi22 * nu_init + input_gain * dt * trap
    return out


def impulse_response(tf: RationalTF, times) -> np.ndarray:
    """Impulse response of a strictly proper tf of degree <= 2, in closed form."""
    return _response(tf, times, step=False)


def step_response(tf: RationalTF, times) -> np.ndarray:
    """Unit-step response of a strictly proper tf of degree <= 2, in closed form."""
    return _response(tf, times, step=True)


def _response(tf: RationalTF, times, step: bool) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    den = tf.den
    num = tf.num
    if len(num) >= len(den):
        raise DegreeError("time responses require a strictly proper transfer function")
    deg = len(den) - 1
    if deg > 2:
        raise DegreeError(f"time responses support degree <= 2, got {deg}")
    n_poly = np.zeros(deg, dtype=complex)
    n_poly[deg - len(num):] = num

    def nval(s: complex) -> complex:
        acc = 0.0 + 0.0j
        for coef in n_poly:
            acc = acc * s + coef
        return acc

    if deg == 1:
        p1 = -complex(den[1])
        h = n_poly[0] * np.exp(p1 * t)
        out = _integrate_modes([(n_poly[0], p1)], t) if step else h
        return np.real(out)

    r1, r2 = _roots_closed_form(den)
    # roots an ulp apart are a repeated mode numerically; the confluent form
    # stays stable there (residues of the distinct form blow up as 1/(r1-r2))
    repeated = abs(r1 - r2) <= 1e-9 * (abs(r1) + abs(r2) + 1e-300)
    if not repeated:
        c1 = nval(r1) / (r1 - r2)
        c2 = nval(r2) / (r2 - r1)
        if step:
            return np.real(_integrate_modes([(c1, r1), (c2, r2)], t))
        return np.real(c1 * np.exp(r1 * t) + c2 * np.exp(r2 * t))
    # repeated pole: H = (n1 s + n0)/(s - p)^2 -> n1 e^{pt} + (n0 + n1 p) t e^{pt}
    p = 0.5 * (r1 + r2)
    n1, n0 = n_poly[0], n_poly[1]
    k = n0 + n1 * p
    if not step:
        return np.real(n1 * np.exp(p * t) + k * t * np.exp(p * t))
    if p == 0:
        return np.real(n1 * t + 0.5 * k * t * t)
    ept = np.exp(p * t)
    integral = n1 * (ept - 1.0) / p + k * (t * ept / p - (ept - 1.0) / (p * p))
    return np.real(integral)


def _integrate_modes(modes: list[tuple[complex, complex]], t: np.ndarray) -> np.ndarray:
    """Integral from 0 to t of sum c * exp(p s) ds for each (c, p) mode."""
    acc = np.zeros_like(t, dtype=complex)
    for c, p in modes:
        if p == 0:
            acc = acc + c * t
        else:
            acc = acc + c * (np.exp(p * t) - 1.0) / p
    return acc


def alpha_decay_condition(lambda2: float, lambda6: float, c: float, t: float) -> bool:
    """Whether the bias-correction factor is strictly decreasing at time t.

    With g1 = 1 - lambda2 and g2 = 1 - lambda6 (both in (0, 1)), the factor
    decreases at t iff

        (g2/g1)^(t+1) * (1 - g1^(t+1)) / (1 - g2^(t+1)) > (1/c) * log(g1)/log(g2).

    Evaluating this on a time grid locates the settling point after which the
    factor is monotonically non-increasing.
    """
    if not (0.0 < lambda2 < 1.0 and 0.0 < lambda6 < 1.0):
        raise ValidationError(["0 < lambda2 < 1", "0 < lambda6 < 1"])
    g1 = 1.0 - lambda2
    g2 = 1.0 - lambda6
    e = t + 1.0
    lhs = (g2 / g1) ** e * (1.0 - g1 ** e) / (1.0 - g2 ** e)
    rhs = (1.0 / c) * (math.log(g1) / math.log(g2))
    return bool(lhs > rhs)
