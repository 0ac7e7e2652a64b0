"""Legendre, angular and spherical Bessel/Hankel function evaluation.

Everything downstream (modal systems, field series, residuals) is built on
the tables computed here.  Legendre polynomials and their first three
derivatives are generated by three-term recurrences; spherical Bessel
functions of the first kind use a backward (Miller-type) recurrence with
renormalization, functions of the second kind a forward recurrence.
Derivatives are always evaluated through the identity
dZ_n/dz = (n/z) Z_n - Z_{n+1}, never by numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Termination trigger for growing |y_n|; solutions past this order overflow
# downstream products in double precision.
OVERFLOW_LIMIT = 1e290

_RESCALE = 1e-250   # backward-recurrence renormalization factor
_RESCALE_TRIP = 1e250


class PoleError(ValueError):
    """Singular radial function requested at argument zero."""


# ---------------------------------------------------------------------------
# Legendre polynomials and angular functions
# ---------------------------------------------------------------------------

@dataclass
class LegendreTable:
    """P_n and its first three derivatives at a fixed argument.

    Arrays have shape (order_max + 1,) for scalar input or
    (order_max + 1, npts) for array input.
    """

    order_max: int
    x: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    d2p: np.ndarray
    d3p: np.ndarray


def legendre_table(x, n_max: int) -> LegendreTable:
    """Evaluate P_n(x), P'_n, P''_n, P'''_n for n = 0..n_max.

    Args:
        x: argument(s) in [-1, 1] (scalar or 1-D array).
        n_max: highest order (>= 0).
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(xv) > 1.0 + 1e-14):
        raise ValueError("Legendre argument must lie in [-1, 1]")
    xv = np.clip(xv, -1.0, 1.0)

    shape = (n_max + 1, xv.size)
    p = np.zeros(shape)
    dp = np.zeros(shape)
    d2p = np.zeros(shape)
    d3p = np.zeros(shape)
    p[0] = 1.0
    if n_max >= 1:
        p[1] = xv
        dp[1] = 1.0
    # (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}, and the analogous
    # recurrences for the derivatives obtained by differentiating it.
    for n in range(1, n_max):
        c1 = 2 * n + 1
        p[n + 1] = (c1 * xv * p[n] - n * p[n - 1]) / (n + 1)
        dp[n + 1] = (c1 * (p[n] + xv * dp[n]) - n * dp[n - 1]) / (n + 1)
        d2p[n + 1] = (c1 * (2.0 * dp[n] + xv * d2p[n]) - n * d2p[n - 1]) / (n + 1)
        d3p[n + 1] = (c1 * (3.0 * d2p[n] + xv * d3p[n]) - n * d3p[n - 1]) / (n + 1)

    if scalar:
        p, dp, d2p, d3p = p[:, 0], dp[:, 0], d2p[:, 0], d3p[:, 0]
        xv = xv[0]
    return LegendreTable(order_max=n_max, x=xv, p=p, dp=dp, d2p=d2p, d3p=d3p)


@dataclass
class AngularFunctions:
    """Angular factors Q_n^(j)(theta) = d^j/dtheta^j P_n(cos theta), j = 0..3.

    ``q1cot`` holds the product Q_n^(1)(theta) * cot(theta) evaluated in the
    division-free form -P'_n(cos theta) cos(theta); it is finite at the poles
    and equals -n(n+1)/2 (up to the parity sign) there.
    """

    theta: np.ndarray
    order_max: int
    q0: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    q1cot: np.ndarray


def q_functions(theta, n_max: int) -> AngularFunctions:
    """Evaluate Q_n^(0..3)(theta) for n = 0..n_max, theta in [0, pi].

    The sin-theta-multiplied closed forms are used throughout, so no
    division by sin(theta) ever occurs.
    """
    scalar = np.isscalar(theta) or np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any((th < -1e-12) | (th > np.pi + 1e-12)):
        raise ValueError("theta must lie in [0, pi]")
    ct = np.cos(th)
    st = np.sin(th)
    tab = legendre_table(ct, n_max)
    p, dp, d2p, d3p = (np.atleast_2d(a) for a in (tab.p, tab.dp, tab.d2p, tab.d3p))

    q0 = p.copy()
    q1 = -dp * st
    q2 = -dp * ct + d2p * st**2
    q3 = dp * st + 1.5 * d2p * np.sin(2.0 * th) - d3p * st**3
    q1cot = -dp * ct

    if scalar:
        q0, q1, q2, q3, q1cot = (a[:, 0] for a in (q0, q1, q2, q3, q1cot))
        th = th[0]
    return AngularFunctions(theta=th, order_max=n_max,
                            q0=q0, q1=q1, q2=q2, q3=q3, q1cot=q1cot)


# ---------------------------------------------------------------------------
# Spherical Bessel and Hankel functions
# ---------------------------------------------------------------------------

KIND_FIRST = "first"
KIND_SECOND = "second"
KIND_HANKEL1 = "hankel1"
_KINDS = (KIND_FIRST, KIND_SECOND, KIND_HANKEL1)


def _jn_forward(x: np.ndarray, n_max: int) -> np.ndarray:
    """Upward recurrence for j_n; only stable while n stays well below x."""
    out = np.empty((n_max + 1, x.size))
    out[0] = np.sin(x) / x
    if n_max >= 1:
        out[1] = np.sin(x) / x**2 - np.cos(x) / x
    for n in range(1, n_max):
        out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    return out


def _jn_backward(x: np.ndarray, n_max: int) -> np.ndarray:
    """Miller backward recurrence for j_n, renormalized against j_0 or j_1."""
    npts = x.size
    out = np.zeros((n_max + 1, npts))
    # Seed above both the requested order and the turning point n ~ x.
    start = int(max(n_max, np.max(x + 20.0 * np.cbrt(x)))) + 15
    vp = np.zeros(npts)           # unnormalized value at order n+2
    vc = np.full(npts, 1e-30)     # unnormalized value at order n+1
    for n in range(start - 1, -1, -1):
        vn = (2 * n + 3) / x * vc - vp
        big = np.abs(vn) > _RESCALE_TRIP
        if big.any():
            # Rescale the running pair and already-stored rows of the
            # affected columns so the whole column shares one scale.
            vn[big] *= _RESCALE
            vc[big] *= _RESCALE
            out[:, big] *= _RESCALE
        if n + 1 <= n_max:
            out[n + 1] = vc
        vp, vc = vc, vn
    out[0] = vc
    v1 = vp  # unnormalized order-1 value

    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    # Normalize against whichever reference value is larger; j_0 and j_1
    # cannot vanish simultaneously.
    use0 = np.abs(j0) >= np.abs(j1)
    ratio = np.where(use0, j0 / np.where(vc != 0.0, vc, 1.0),
                     j1 / np.where(v1 != 0.0, v1, 1.0))
    return out * ratio


def _jn_table(x: np.ndarray, n_max: int) -> np.ndarray:
    """j_n(x) for n = 0..n_max over a 1-D array of arguments >= 0."""
    out = np.zeros((n_max + 1, x.size))
    zero = x == 0.0
    if zero.any():
        out[0, zero] = 1.0
    pos = ~zero
    if pos.any():
        xp = x[pos]
        # In the oscillatory regime n << x the upward recurrence is stable
        # and avoids the long backward sweep needed for very large x.
        fwd = (n_max + 2) < 0.75 * xp
        if fwd.all():
            out[:, pos] = _jn_forward(xp, n_max)
        elif fwd.any():
            sub = np.zeros((n_max + 1, xp.size))
            sub[:, fwd] = _jn_forward(xp[fwd], n_max)
            sub[:, ~fwd] = _jn_backward(xp[~fwd], n_max)
            out[:, pos] = sub
        else:
            out[:, pos] = _jn_backward(xp, n_max)
    return out


def _yn_table(x: np.ndarray, n_max: int) -> np.ndarray:
    """y_n(x) for n = 0..n_max by forward recurrence (x > 0 required)."""
    out = np.empty((n_max + 1, x.size))
    out[0] = -np.cos(x) / x
    if n_max >= 1:
        out[1] = -np.cos(x) / x**2 - np.sin(x) / x
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_max):
            out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    return out


def _first_overflow_order(y: np.ndarray) -> int | None:
    """Smallest order with |y_n| > OVERFLOW_LIMIT (NaN counts), or None."""
    bad = ~(np.abs(y) <= OVERFLOW_LIMIT)  # catches inf and NaN too
    if y.ndim > 1:
        bad = bad.any(axis=tuple(range(1, y.ndim)))
    idx = np.nonzero(bad)[0]
    return int(idx[0]) if idx.size else None


@dataclass
class RadialBasis:
    """Z_n values (n = 0..order_max+1) at fixed argument(s) of one kind.

    The extra order keeps the derivative identity dZ_n = (n/z)Z_n - Z_{n+1}
    available for all n <= order_max.  ``overflow_flag`` is set exactly when
    some computed |y_n| exceeds OVERFLOW_LIMIT; ``overflow_order`` is the
    first such order.
    """

    argument: np.ndarray
    kind: str
    order_max: int
    values: np.ndarray
    overflow_flag: bool = False
    overflow_order: int | None = field(default=None)


def radial_basis(zeta, kind: str, n_max: int) -> RadialBasis:
    """Evaluate spherical j_n, y_n or h_n^(1) for n = 0..n_max+1.

    Args:
        zeta: real argument(s); >= 0 for kind "first", > 0 otherwise.
        kind: one of "first", "second", "hankel1".
        n_max: highest order for which derivatives will be requested.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    scalar = np.isscalar(zeta) or np.ndim(zeta) == 0
    z = np.atleast_1d(np.asarray(zeta))
    if np.iscomplexobj(z):
        raise ValueError("complex arguments are not supported")
    z = z.astype(float)
    if np.any(z < 0.0):
        raise ValueError("argument must be non-negative")
    if kind != KIND_FIRST and np.any(z == 0.0):
        raise PoleError(f"{kind} kind is singular at zero argument")

    rows = n_max + 2
    if kind == KIND_FIRST:
        vals = _jn_table(z, rows - 1)
        ovf_order = None
    elif kind == KIND_SECOND:
        vals = _yn_table(z, rows - 1)
        ovf_order = _first_overflow_order(vals)
    else:
        y = _yn_table(z, rows - 1)
        ovf_order = _first_overflow_order(y)
        vals = _jn_table(z, rows - 1) + 1j * y

    if scalar:
        vals = vals[:, 0]
        z = z[0]
    return RadialBasis(argument=z, kind=kind, order_max=n_max, values=vals,
                       overflow_flag=ovf_order is not None,
                       overflow_order=ovf_order)


def radial_derivative(basis: RadialBasis, n: int):
    """dZ_n/dz from the (n, n+1) pair identity: (n/z) Z_n - Z_{n+1}."""
    if n < 0 or n + 1 >= basis.values.shape[0]:
        raise IndexError(f"order {n + 1} not available in basis of order "
                         f"{basis.order_max + 1}")
    return n / basis.argument * basis.values[n] - basis.values[n + 1]
