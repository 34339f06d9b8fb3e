"""Post-contraction checks: real-valuedness, scalar enclosures along the
branch, certified derivative signs, boundary-crossing verification, and the
map back to the unscaled coordinates."""

from __future__ import annotations

import math

import numpy as np

from . import fcfloat, model
from .errors import CrossingUnverified
from .interval import Interval, RectComplex
from .seqspace import ChebSeq, eval_cheb, eval_fc, norm_P
from .zero_problem import BranchPoint


def check_sigma_fixed(chi_bar: BranchPoint) -> bool:
    """Bit-level conjugacy symmetry of the stored coefficients."""
    for s in chi_bar.scalars():
        c = s.coeffs
        if np.any(c.il != 0.0) or np.any(c.ih != 0.0):
            return False
    for p in chi_bar.u:
        c = p.coeffs
        if not (np.array_equal(c.rl, c.rl[:, ::-1]) and
                np.array_equal(c.rh, c.rh[:, ::-1]) and
                np.array_equal(c.il, -c.ih[:, ::-1])):
            return False
    return True


def enclose_scalar(bar: ChebSeq, r: float, eta: Interval) -> Interval:
    """Enclosure of a true scalar within distance r of the interpolant."""
    val = eval_cheb(bar, eta)
    return val.re + Interval(-r, r)


def derivative_sign(bar: ChebSeq, r: float, nu: float, N: int, eta: Interval) -> int:
    """Certified sign of the eta-derivative of the true function: +1, -1, or 0.

    The finite sum sum_{n=1}^N n psi_n sin(n acos eta) determines the sign;
    it is inflated by r times the weight sum plus the geometric tail
    ((nu-1) N + nu) / ((nu-1)^2 nu^N).
    """
    theta = eta.acos()
    total = Interval(0.0)
    weight = Interval(0.0)
    for n in range(1, min(N, bar.deg) + 1):
        s = (theta * float(n)).sin()
        total = total + bar.entry(n).re * s * float(n)
        weight = weight + abs(s) * float(n)
    nu_iv = Interval(nu)
    num = (nu_iv - 1.0) * float(N) + nu_iv
    den = (nu_iv - 1.0) ** 2 * nu_iv ** N
    tail = num / den
    err = (Interval(r) * (weight + tail)).hi
    if total.lo - err > 0.0:
        return 1
    if total.hi + err < 0.0:
        return -1
    return 0


def _certify_panels(check, lo: float, hi: float, what: str, min_width: float = 2.0 ** -20):
    """Adaptive dyadic subdivision until `check` holds on every panel."""
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        if check(Interval(a, b)):
            continue
        if b - a <= min_width:
            raise CrossingUnverified(f"{what} fails on panel [{a}, {b}]")
        m = 0.5 * (a + b)
        stack.append((a, m))
        stack.append((m, b))


class CrossingReport:
    """Certified boundary-crossing data and the parameter enclosures."""

    def __init__(self, h1m, h1p, h2m, h2p, eta_bracket_1, eta_bracket_2,
                 kappa_hat_1, kappa_hat_2, positive_interior):
        self.h1_minus = h1m
        self.h1_plus = h1p
        self.h2_minus = h2m
        self.h2_plus = h2p
        self.eta_bracket_1 = eta_bracket_1   # Interval around eta_hat_1
        self.eta_bracket_2 = eta_bracket_2
        self.kappa_hat_1 = kappa_hat_1       # Interval
        self.kappa_hat_2 = kappa_hat_2
        self.positive_interior = positive_interior


def select_h_values(zeta1_mid, zeta2_mid, r: float, buffer_floor: float = 1e-6,
                    inner_shift=None) -> tuple:
    """Pick the four split points from the float-stage amplitude curves.

    The crossing brackets put |zeta| at max(100 r, buffer_floor); the inner
    points h1+ and h2- may additionally be pushed inward by `inner_shift`
    (eta margins from the stability stage) so the spectral checks have room.
    """
    buf = max(100.0 * r, buffer_floor)
    eta1 = _root_of(zeta2_mid)
    eta2 = _root_of(zeta1_mid)
    h1m = _level_of(zeta2_mid, -buf, -1.0, eta1)
    h1p = _level_of(zeta2_mid, +buf, eta1, +1.0)
    h2m = _level_of(zeta1_mid, +buf, eta2, -1.0)
    h2p = _level_of(zeta1_mid, -buf, eta2, +1.0)
    if inner_shift is not None:
        h1p = max(h1p, inner_shift[0])
        h2m = min(h2m, inner_shift[1])
    if not (-1.0 < h1m < h1p <= 0.0 <= h2m < h2p < 1.0):
        raise CrossingUnverified(
            f"ordering -1 < {h1m} < {h1p} <= 0 <= {h2m} < {h2p} < 1 fails")
    return h1m, h1p, h2m, h2p


def _root_of(coeffs: np.ndarray) -> float:
    from scipy.optimize import brentq
    f = lambda e: float(fcfloat.coeffs_to_vals(coeffs, [e])[0].real)
    grid = np.linspace(-1.0, 1.0, 2001)
    vals = fcfloat.coeffs_to_vals(coeffs, grid).real
    sign_change = np.nonzero(np.diff(np.sign(vals)))[0]
    if len(sign_change) != 1:
        raise CrossingUnverified(f"expected one sign change, found {len(sign_change)}")
    i = sign_change[0]
    return brentq(f, grid[i], grid[i + 1], xtol=1e-15)


def _level_of(coeffs: np.ndarray, level: float, a: float, b: float) -> float:
    from scipy.optimize import brentq
    f = lambda e: float(fcfloat.coeffs_to_vals(coeffs, [e])[0].real) - level
    lo, hi = min(a, b), max(a, b)
    return brentq(f, lo, hi, xtol=1e-15)


def verify_crossings(chi_bar: BranchPoint, r: float, pc: model.ParamCurves,
                     h_values: tuple | None = None, min_width: float = 2.0 ** -20
                     ) -> CrossingReport:
    """Certify the three boundary-crossing conditions and enclose the
    bifurcation parameters."""
    nu = chi_bar.nu
    z1, z2 = chi_bar.zeta1, chi_bar.zeta2
    if h_values is None:
        h_values = select_h_values(z1.mid().real, z2.mid().real, r)
    h1m, h1p, h2m, h2p = h_values
    N = max(z1.deg, z2.deg)

    # interior positivity
    _certify_panels(lambda iv: enclose_scalar(z1, r, iv).lo > 0.0,
                    h1p, h2m, "zeta1 > 0 on interior", min_width)
    _certify_panels(lambda iv: enclose_scalar(z2, r, iv).lo > 0.0,
                    h1p, h2m, "zeta2 > 0 on interior", min_width)
    # crossing of the first boundary plane: zeta2 negative then increasing
    if not enclose_scalar(z2, r, Interval(h1m)).hi < 0.0:
        raise CrossingUnverified(f"zeta2({h1m}) < 0 not certified")
    _certify_panels(lambda iv: derivative_sign(z2, r, nu, N, iv) == 1,
                    h1m, h1p, "zeta2 increasing", min_width)
    # crossing of the second: zeta1 positive then decreasing through zero
    if not enclose_scalar(z1, r, Interval(h2p)).hi < 0.0:
        raise CrossingUnverified(f"zeta1({h2p}) < 0 not certified")
    _certify_panels(lambda iv: derivative_sign(z1, r, nu, N, iv) == -1,
                    h2m, h2p, "zeta1 decreasing", min_width)

    br1 = _refine_root_bracket(z2, r, h1m, h1p)
    br2 = _refine_root_bracket(z1, r, h2m, h2p)
    kh1 = model.kappa_of_eta(pc.params, br1)
    kh2 = model.kappa_of_eta(pc.params, br2)
    return CrossingReport(h1m, h1p, h2m, h2p, br1, br2, kh1, kh2, True)


def _refine_root_bracket(bar: ChebSeq, r: float, lo: float, hi: float) -> Interval:
    """Shrink a monotone sign-change bracket by bisection on enclosures."""
    for _ in range(200):
        if hi - lo < 1e-13:
            break
        mid = 0.5 * (lo + hi)
        v = enclose_scalar(bar, r, Interval(mid))
        if v.hi < 0.0:
            lo = mid
        elif v.lo > 0.0:
            hi = mid
        else:
            break
    # make the final bracket sign-certified
    return Interval(lo, hi)


def to_original(chi_bar: BranchPoint, r: float, p: model.ModelParams,
                kappa: Interval, t: Interval) -> tuple:
    """Enclosures of the unscaled solution (X1, X2, S) and the minimal period."""
    eta = model.eta_of_kappa(p, kappa)
    tau = enclose_scalar(chi_bar.tau, r, eta)
    period = Interval.two_pi() * tau / p.gamma
    t_arg = t * p.gamma / tau
    out = []
    for j, (yj, mj) in ((0, (p.y1, p.m1)), (1, (p.y2, p.m2))):
        zeta = enclose_scalar((chi_bar.zeta1, chi_bar.zeta2)[j], r, eta)
        uval = eval_fc(chi_bar.u[j], t_arg, eta)
        uval = RectComplex(uval.re + Interval(-r, r), uval.im + Interval(-r, r))
        out.append(kappa * zeta * (p.gamma * yj / mj) * uval.re)
    sval = eval_fc(chi_bar.u[2], t_arg, eta)
    s_enc = kappa * (sval.re + Interval(-r, r))
    return out[0], out[1], s_enc, period
