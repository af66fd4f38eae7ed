"""Moment-generating functions as truncated Taylor jets.

A :class:`TaylorJet` stores the coefficients of a trivariate power series in
(x, y, s) truncated at x^2 y^2 s^1.  x and y are the generating-function
variables for the bucket (arm 1) and analyzer (arm 2) photon counts; s seeds
the derivative with respect to the transmittivity of the analyzed mode, so a
single jet evaluation yields every moment up to <n1^2 n2^2> together with
its parameter derivative.

Generating functions used here (per-arm mean nbar = n_th / 2):

    g_th(x | m)   = 1 / (1 + m (1 - e^x))                 thermal mode, mean m
    g_k(x, y | t) = 1 / (1 + nbar (1 + t - t e^x - e^y))  split mode behind the filter

The analyzed-mode function for a K-mode object is the product
g_k(x, y | t_k) * prod_{j != k} g_th(x | t_j nbar): spectator modes only feed
the mode-insensitive bucket detector.
"""

import math
from dataclasses import dataclass

import numpy as np

NX, NY, NS = 3, 3, 2  # orders kept: x^0..2, y^0..2, s^0..1


class TaylorJet:
    """Immutable truncated power series with arithmetic closed on the truncation.

    Because every retained monomial has total degree <= 5 and all series have
    nonnegative exponents, truncated products are exact for the retained
    coefficients.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=np.float64)
        if c.shape != (NX, NY, NS):
            raise ValueError(f"jet coefficients must have shape {(NX, NY, NS)}")
        c = c.copy()
        c.flags.writeable = False
        self.c = c

    @classmethod
    def constant(cls, value):
        c = np.zeros((NX, NY, NS))
        c[0, 0, 0] = float(value)
        return cls(c)

    def __add__(self, other):
        if isinstance(other, TaylorJet):
            return TaylorJet(self.c + other.c)
        c = np.array(self.c)
        c[0, 0, 0] += float(other)
        return TaylorJet(c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, TaylorJet):
            return TaylorJet(self.c - other.c)
        return self + (-float(other))

    def __neg__(self):
        return TaylorJet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, TaylorJet):
            return TaylorJet(self.c * float(other))
        a, b = self.c, other.c
        out = np.zeros((NX, NY, NS))
        for i in range(NX):
            for j in range(NY):
                for l in range(NS):
                    acc = 0.0
                    for p in range(i + 1):
                        for r in range(j + 1):
                            for d in range(l + 1):
                                acc += a[p, r, d] * b[i - p, j - r, l - d]
                    out[i, j, l] = acc
        return TaylorJet(out)

    __rmul__ = __mul__

    def reciprocal(self):
        """Multiplicative inverse, exact at the truncation order.

        Writes self = c0 (1 + u) with u free of a constant term and expands
        1/(1+u) as a Neumann series; u^m vanishes beyond the maximal total
        degree, so six terms suffice.
        """
        c0 = self.c[0, 0, 0]
        if c0 == 0.0:
            raise ZeroDivisionError("cannot invert a jet with zero constant term")
        u = TaylorJet(self.c / c0) - 1.0
        acc = TaylorJet.constant(1.0)
        power = TaylorJet.constant(1.0)
        for _ in range(5):
            power = power * u
            acc = acc - power if _ % 2 == 0 else acc + power
        return acc * (1.0 / c0)

    def __repr__(self):
        return f"TaylorJet({self.c.tolist()!r})"


def g_th_jet(mean):
    """Jet of the thermal generating function 1 / (1 + mean (1 - e^x))."""
    mean = float(mean)
    if mean < 0.0:
        raise ValueError(f"mean must be >= 0, got {mean!r}")
    u = np.zeros((NX, NY, NS))
    u[1, 0, 0] = -mean  # mean * (1 - e^x) = -mean x - mean x^2/2 + O(x^3)
    u[2, 0, 0] = -mean / 2.0
    return (TaylorJet(u) + 1.0).reciprocal()


def g_k_jet(t, nbar):
    """Jet of the analyzed-mode generating function with the derivative seed.

    Expands 1 / (1 + nbar ((1 - e^y) + (t + s)(1 - e^x))); the seed s rides
    along with t, so the s-slice of any downstream product is the exact
    derivative with respect to this mode's transmittivity.
    """
    t = float(t)
    nbar = float(nbar)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    if nbar < 0.0:
        raise ValueError(f"nbar must be >= 0, got {nbar!r}")
    u = np.zeros((NX, NY, NS))
    u[0, 1, 0] = -nbar
    u[0, 2, 0] = -nbar / 2.0
    u[1, 0, 0] = -nbar * t
    u[2, 0, 0] = -nbar * t / 2.0
    u[1, 0, 1] = -nbar
    u[2, 0, 1] = -nbar / 2.0
    return (TaylorJet(u) + 1.0).reciprocal()


def mgf_product(k, ts, nbar):
    """Generating-function jet for analyzing mode ``k`` of a K-mode object."""
    ts = np.asarray(ts, dtype=np.float64)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("ts must be a nonempty 1-D sequence of transmittivities")
    if not (0 <= k < ts.size):
        raise IndexError(f"mode index {k} out of range for {ts.size} modes")
    jet = g_k_jet(ts[k], nbar)
    for j, tj in enumerate(ts):
        if j == k:
            continue
        jet = jet * g_th_jet(tj * nbar)
    return jet


def extract_moment(jet, alpha, beta):
    """Moment <n1^alpha n2^beta> from a generating-function jet."""
    if not (0 <= alpha < NX and 0 <= beta < NY):
        raise ValueError(f"moment order ({alpha}, {beta}) exceeds the jet truncation")
    return math.factorial(alpha) * math.factorial(beta) * jet.c[alpha, beta, 0]


def extract_moment_derivative(jet, alpha, beta):
    """d<n1^alpha n2^beta>/dt of the seeded mode, from the s-slice of the jet."""
    if not (0 <= alpha < NX and 0 <= beta < NY):
        raise ValueError(f"moment order ({alpha}, {beta}) exceeds the jet truncation")
    return math.factorial(alpha) * math.factorial(beta) * jet.c[alpha, beta, 1]


@dataclass(frozen=True)
class MomentSet:
    """Per-repetition moments of the correlation measurement on one mode."""

    mean1: float
    mean2: float
    c12: float
    m22: float
    var_c12: float
    dc12_dt: float


def correlation_stats(k, ts, nbar):
    """All moments needed by the correlation estimator for mode ``k``.

    c12 = <n1 n2> is the correlation signal, var_c12 = <n1^2 n2^2> - c12^2
    its single-shot variance, and dc12_dt the sensitivity of the signal to
    the analyzed transmittivity (2 nbar^2 for every profile).
    """
    jet = mgf_product(k, ts, nbar)
    c12 = float(extract_moment(jet, 1, 1))
    m22 = float(extract_moment(jet, 2, 2))
    return MomentSet(
        mean1=float(extract_moment(jet, 1, 0)),
        mean2=float(extract_moment(jet, 0, 1)),
        c12=c12,
        m22=m22,
        var_c12=m22 - c12 * c12,
        dc12_dt=float(extract_moment_derivative(jet, 1, 1)),
    )
