"""Weighted-l1 sequence spaces of Chebyshev and Fourier-Chebyshev coefficients.

Conventions
-----------
A Chebyshev element stores one-sided coefficients ``psi_n`` (n = 0..deg) and
represents the function

    psi(eta) = psi_0 + 2 * sum_{n>=1} psi_n T_n(eta),

i.e. the symmetric two-sided sequence ``Psi_n = psi_{|n|}`` under
``eta = cos(theta)``.  Its norm is ``sum_{n in Z} |psi_{|n|}| nu^{|n|}``.

A Fourier-Chebyshev element stores ``phi_{n,k}`` (n = 0..deg, |k| <= K) and
represents

    phi(t, eta) = sum_k e^{-i k t} [ phi_{0,k} + 2 sum_{n>=1} phi_{n,k} T_n(eta) ],

with norm ``sum_{n,k in Z} |phi_{|n|,k}| nu^{|n|}``.  Time differentiation
acts as multiplication by ``-i k`` on mode k; the inverse on tail modes is
multiplication by ``1/(-i k)``.  Both spaces are Banach algebras for the
folded convolutions implemented here.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BallNotInvertible, DomainError, NotInvertibleCandidate
from .interval import Interval, RectComplex
from .ivec import CRect, f64_down, f64_up, nd, nu as nup, sum_up


def _lo64(x) -> float:
    return float(np.asarray(f64_down(x), dtype=np.float64))


def _hi64(x) -> float:
    return float(np.asarray(f64_up(x), dtype=np.float64))


# ---------------------------------------------------------------------------
# containers


class ChebSeq:
    """Element of the Chebyshev coefficient space (one eta-variable)."""

    __slots__ = ("coeffs", "nu")

    def __init__(self, coeffs: CRect, nu: float):
        assert coeffs.rl.ndim == 1
        self.coeffs = coeffs
        self.nu = float(nu)

    @classmethod
    def from_floats(cls, values, nu: float) -> "ChebSeq":
        return cls(CRect.from_complex(np.asarray(values, dtype=np.complex128)), nu)

    @classmethod
    def zero(cls, nu: float, deg: int = 0) -> "ChebSeq":
        return cls(CRect.zeros(deg + 1), nu)

    @classmethod
    def one(cls, nu: float) -> "ChebSeq":
        return cls.from_floats([1.0], nu)

    @property
    def deg(self) -> int:
        return self.coeffs.rl.shape[0] - 1

    def entry(self, n: int) -> RectComplex:
        c = self.coeffs
        return RectComplex(Interval(_lo64(c.rl[n]), _hi64(c.rh[n])),
                           Interval(_lo64(c.il[n]), _hi64(c.ih[n])))

    def mid(self):
        c = self.coeffs
        re = np.asarray(c.rl + 0.5 * (c.rh - c.rl), dtype=np.float64)
        im = np.asarray(c.il + 0.5 * (c.ih - c.il), dtype=np.float64)
        return re + 1j * im

    def pad(self, deg: int) -> "ChebSeq":
        if deg <= self.deg:
            return self
        out = CRect.zeros(deg + 1)
        out.set_slice(slice(0, self.deg + 1), self.coeffs)
        return ChebSeq(out, self.nu)

    def __add__(self, other: "ChebSeq") -> "ChebSeq":
        d = max(self.deg, other.deg)
        return ChebSeq(self.pad(d).coeffs.add(other.pad(d).coeffs), self.nu)

    def __sub__(self, other: "ChebSeq") -> "ChebSeq":
        d = max(self.deg, other.deg)
        return ChebSeq(self.pad(d).coeffs.sub(other.pad(d).coeffs), self.nu)

    def __neg__(self) -> "ChebSeq":
        return ChebSeq(self.coeffs.neg(), self.nu)

    def scale(self, c) -> "ChebSeq":
        if isinstance(c, Interval):
            return ChebSeq(self.coeffs.scale_real(c.lo, c.hi), self.nu)
        z = RectComplex.point(c) if not isinstance(c, RectComplex) else c
        sc = CRect(np.array([z.re.lo]), np.array([z.re.hi]),
                   np.array([z.im.lo]), np.array([z.im.hi]))
        return cheb_mul(self, ChebSeq(sc, self.nu))

    def conj(self) -> "ChebSeq":
        return ChebSeq(self.coeffs.conj(), self.nu)


class FourierChebSeq:
    """Element of the Fourier-Chebyshev coefficient space.

    ``coeffs`` has shape (deg+1, 2K+1), column j holding mode k = j - K.
    """

    __slots__ = ("coeffs", "K", "nu")

    def __init__(self, coeffs: CRect, K: int, nu: float):
        assert coeffs.rl.ndim == 2 and coeffs.rl.shape[1] == 2 * K + 1
        self.coeffs = coeffs
        self.K = K
        self.nu = float(nu)

    @classmethod
    def from_floats(cls, values, K: int, nu: float) -> "FourierChebSeq":
        return cls(CRect.from_complex(np.asarray(values, dtype=np.complex128)), K, nu)

    @classmethod
    def zero(cls, nu: float, deg: int = 0, K: int = 0) -> "FourierChebSeq":
        return cls(CRect.zeros((deg + 1, 2 * K + 1)), K, nu)

    @classmethod
    def one(cls, nu: float) -> "FourierChebSeq":
        return cls.from_floats([[1.0]], 0, nu)

    @property
    def deg(self) -> int:
        return self.coeffs.rl.shape[0] - 1

    def entry(self, n: int, k: int) -> RectComplex:
        c = self.coeffs
        j = k + self.K
        return RectComplex(Interval(_lo64(c.rl[n, j]), _hi64(c.rh[n, j])),
                           Interval(_lo64(c.il[n, j]), _hi64(c.ih[n, j])))

    def mid(self):
        c = self.coeffs
        re = np.asarray(c.rl + 0.5 * (c.rh - c.rl), dtype=np.float64)
        im = np.asarray(c.il + 0.5 * (c.ih - c.il), dtype=np.float64)
        return re + 1j * im

    def mode(self, k: int) -> ChebSeq:
        """The Chebyshev series of Fourier mode k."""
        if abs(k) > self.K:
            return ChebSeq.zero(self.nu, self.deg)
        return ChebSeq(self.coeffs[:, k + self.K].copy(), self.nu)

    def pad(self, deg: int, K: int) -> "FourierChebSeq":
        if deg <= self.deg and K <= self.K:
            return self
        deg = max(deg, self.deg)
        K = max(K, self.K)
        out = CRect.zeros((deg + 1, 2 * K + 1))
        out.set_slice((slice(0, self.deg + 1), slice(K - self.K, K + self.K + 1)), self.coeffs)
        return FourierChebSeq(out, K, self.nu)

    def _common(self, other: "FourierChebSeq"):
        d = max(self.deg, other.deg)
        K = max(self.K, other.K)
        return self.pad(d, K), other.pad(d, K)

    def __add__(self, other) -> "FourierChebSeq":
        a, b = self._common(as_fc(other, self.nu))
        return FourierChebSeq(a.coeffs.add(b.coeffs), a.K, a.nu)

    def __sub__(self, other) -> "FourierChebSeq":
        a, b = self._common(as_fc(other, self.nu))
        return FourierChebSeq(a.coeffs.sub(b.coeffs), a.K, a.nu)

    def __neg__(self) -> "FourierChebSeq":
        return FourierChebSeq(self.coeffs.neg(), self.K, self.nu)

    def scale(self, c) -> "FourierChebSeq":
        if isinstance(c, Interval):
            return FourierChebSeq(self.coeffs.scale_real(c.lo, c.hi), self.K, self.nu)
        z = c if isinstance(c, RectComplex) else RectComplex.point(c)
        sc = FourierChebSeq(
            CRect(np.array([[z.re.lo]]), np.array([[z.re.hi]]),
                  np.array([[z.im.lo]]), np.array([[z.im.hi]])), 0, self.nu)
        return fc_mul(self, sc)

    def sigma(self) -> "FourierChebSeq":
        """Conjugacy reflection: (sigma phi)_{n,k} = conj(phi_{n,-k})."""
        c = self.coeffs
        return FourierChebSeq(CRect(c.rl[:, ::-1].copy(), c.rh[:, ::-1].copy(),
                                    -c.ih[:, ::-1].copy(), -c.il[:, ::-1].copy()),
                              self.K, self.nu)


def as_fc(x, nu: float) -> FourierChebSeq:
    """Embed scalars / Chebyshev elements as Fourier-Chebyshev elements."""
    if isinstance(x, FourierChebSeq):
        return x
    if isinstance(x, ChebSeq):
        c = x.coeffs
        shape = (x.deg + 1, 1)
        return FourierChebSeq(CRect(c.rl.reshape(shape).copy(), c.rh.reshape(shape).copy(),
                                    c.il.reshape(shape).copy(), c.ih.reshape(shape).copy()),
                              0, x.nu)
    z = x if isinstance(x, RectComplex) else (
        RectComplex(x) if isinstance(x, Interval) else RectComplex.point(x))
    return FourierChebSeq(CRect(np.array([[z.re.lo]]), np.array([[z.re.hi]]),
                                np.array([[z.im.lo]]), np.array([[z.im.hi]])), 0, nu)


class UVec:
    """Triple of Fourier-Chebyshev elements (one per state component)."""

    __slots__ = ("parts",)

    def __init__(self, u1: FourierChebSeq, u2: FourierChebSeq, u3: FourierChebSeq):
        self.parts = (u1, u2, u3)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, j):
        return self.parts[j]

    def __add__(self, other):
        return UVec(*(a + b for a, b in zip(self.parts, other.parts)))

    def __sub__(self, other):
        return UVec(*(a - b for a, b in zip(self.parts, other.parts)))

    def __neg__(self):
        return UVec(*(-a for a in self.parts))

    @property
    def nu(self):
        return self.parts[0].nu


# ---------------------------------------------------------------------------
# norms


_WEIGHT_CACHE: dict = {}


def _weights(nu: float, length: int):
    """Upper/lower endpoint arrays for the weights (1, 2 nu, 2 nu^2, ...)."""
    key = (nu, length)
    cached = _WEIGHT_CACHE.get(key)
    if cached is not None and cached[0].shape[0] >= length:
        return cached[0][:length], cached[1][:length]
    up = np.empty(max(length, 8))
    dn = np.empty(max(length, 8))
    p = Interval(1.0)
    iv_nu = Interval(nu)
    for n in range(up.shape[0]):
        w = p if n == 0 else p * 2.0
        up[n], dn[n] = w.hi, w.lo
        p = p * iv_nu
    _WEIGHT_CACHE[key] = (up, dn)
    return up[:length], dn[:length]


def norm_P(psi: ChebSeq) -> Interval:
    """Two-sided enclosure of the weighted-l1 norm of a Chebyshev element."""
    w_up, w_dn = _weights(psi.nu, psi.deg + 1)
    sup = psi.coeffs.sup_abs()
    inf = psi.coeffs.inf_abs()
    hi = _hi64(sum_up(nup(sup * w_up)))
    lo = _lo64(-sum_up(-np.maximum(nd(inf * w_dn), 0.0)))
    return Interval(max(lo, 0.0), hi)


def norm_W(phi: FourierChebSeq) -> Interval:
    """Two-sided enclosure of the weighted-l1 norm of a Fourier-Chebyshev element."""
    w_up, w_dn = _weights(phi.nu, phi.deg + 1)
    sup = phi.coeffs.sup_abs()
    inf = phi.coeffs.inf_abs()
    hi = _hi64(sum_up(nup(sup * w_up[:, None])))
    lo = _lo64(-sum_up(-np.maximum(nd(inf * w_dn[:, None]), 0.0)))
    return Interval(max(lo, 0.0), hi)


def norm_U(u: UVec) -> Interval:
    out = Interval(0.0)
    for p in u:
        out = out + norm_W(p)
    return out


# ---------------------------------------------------------------------------
# products


def _two_sided(c: CRect) -> CRect:
    """Lift one-sided Chebyshev rows n=0..N to s=-N..N (row index s+N)."""
    n1 = c.rl.shape[0]
    idx = np.abs(np.arange(-(n1 - 1), n1))
    return c[idx]


def cheb_mul(a: ChebSeq, b: ChebSeq) -> ChebSeq:
    """Folded Chebyshev convolution; degree adds, enclosures throughout."""
    assert a.nu == b.nu
    if a.deg < b.deg:
        a, b = b, a
    na, nb = a.deg, b.deg
    out = CRect.zeros(na + nb + 1, dtype=a.coeffs.rl.dtype)
    narr = np.arange(na + nb + 1)
    b2 = _two_sided(b.coeffs)
    for s in range(-nb, nb + 1):
        bc = b2[s + nb]
        scal = (bc.rl, bc.rh, bc.il, bc.ih)
        if scal[0] == 0.0 == scal[1] and scal[2] == 0.0 == scal[3]:
            continue
        idx = np.abs(narr - s)
        mask = idx <= na
        rows = a.coeffs[idx[mask]]
        out.iadd(mask, _cmul_scalar(scal, rows))
    return ChebSeq(out, a.nu)


def fc_mul(a: FourierChebSeq, b: FourierChebSeq) -> FourierChebSeq:
    """Folded Fourier-Chebyshev convolution; degrees and bandwidths add."""
    assert a.nu == b.nu
    if (a.deg + 1) * (2 * a.K + 1) < (b.deg + 1) * (2 * b.K + 1):
        a, b = b, a
    na, ka = a.deg, a.K
    nb, kb = b.deg, b.K
    no, ko = na + nb, ka + kb
    out = CRect.zeros((no + 1, 2 * ko + 1), dtype=a.coeffs.rl.dtype)
    narr = np.arange(no + 1)
    b2 = _two_sided(b.coeffs)
    nonzero = ~((b2.rl == 0.0) & (b2.rh == 0.0) & (b2.il == 0.0) & (b2.ih == 0.0))
    for s in range(-nb, nb + 1):
        row = b2[s + nb]
        for t in range(-kb, kb + 1):
            if not nonzero[s + nb, t + kb]:
                continue
            el = row[t + kb]
            scal = (el.rl, el.rh, el.il, el.ih)
            idx = np.abs(narr - s)
            mask = idx <= na
            block = _cmul_scalar(scal, a.coeffs[idx[mask]])
            out.iadd((mask, slice(t + kb, t + kb + 2 * ka + 1)), block)
    return FourierChebSeq(out, ko, a.nu)


def _cmul_scalar(scal, block: CRect) -> CRect:
    srl, srh, sil, sih = scal
    rr_lo, rr_hi = _imul_sc(srl, srh, block.rl, block.rh)
    ii_lo, ii_hi = _imul_sc(sil, sih, block.il, block.ih)
    ri_lo, ri_hi = _imul_sc(srl, srh, block.il, block.ih)
    ir_lo, ir_hi = _imul_sc(sil, sih, block.rl, block.rh)
    return CRect(nd(rr_lo - ii_hi), nup(rr_hi - ii_lo),
                 nd(ri_lo + ir_lo), nup(ri_hi + ir_hi))


def _imul_sc(sl, sh, bl, bh):
    p1 = sl * bl
    p2 = sl * bh
    p3 = sh * bl
    p4 = sh * bh
    return (nd(np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))),
            nup(np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))))


# ---------------------------------------------------------------------------
# truncation, tails, differentiation


def truncate(x, K: int, N: int):
    """Projection onto Chebyshev degrees <= N and Fourier modes |k| <= K."""
    if isinstance(x, ChebSeq):
        return ChebSeq(x.coeffs[:min(x.deg, N) + 1].copy(), x.nu)
    deg = min(x.deg, N)
    kk = min(x.K, K)
    sl = (slice(0, deg + 1), slice(x.K - kk, x.K + kk + 1))
    return FourierChebSeq(x.coeffs[sl].copy(), kk, x.nu)


def tail(x: FourierChebSeq, K: int) -> FourierChebSeq:
    """Complement projection keeping only Fourier modes |k| > K."""
    out = x.coeffs.copy()
    kk = min(x.K, K)
    sl = (slice(None), slice(x.K - kk, x.K + kk + 1))
    zero = CRect.zeros((x.deg + 1, 2 * kk + 1))
    out.set_slice(sl, zero)
    return FourierChebSeq(out, x.K, x.nu)


def dt(phi: FourierChebSeq) -> FourierChebSeq:
    """Time derivative: mode k is multiplied by -i k."""
    ks = np.arange(-phi.K, phi.K + 1, dtype=np.float64)
    c = phi.coeffs
    # z * (-i k): re' = k * im, im' = -k * re
    re_lo, re_hi = _imul_sc_vec(ks, c.il, c.ih)
    im_lo, im_hi = _imul_sc_vec(-ks, c.rl, c.rh)
    return FourierChebSeq(CRect(re_lo, re_hi, im_lo, im_hi), phi.K, phi.nu)


def dt_inverse_tail(phi: FourierChebSeq, K: int) -> FourierChebSeq:
    """Inverse time derivative on tail modes: multiply mode k by 1/(-i k), |k| > K."""
    out = CRect.zeros(phi.coeffs.shape)
    c = phi.coeffs
    for j in range(2 * phi.K + 1):
        k = j - phi.K
        if abs(k) <= K:
            continue
        # z / (-i k) = z * (i / k): re' = -im / k, im' = re / k
        out.rl[:, j] = nd(np.minimum(-c.il[:, j] / k, -c.ih[:, j] / k))
        out.rh[:, j] = nup(np.maximum(-c.il[:, j] / k, -c.ih[:, j] / k))
        out.il[:, j] = nd(np.minimum(c.rl[:, j] / k, c.rh[:, j] / k))
        out.ih[:, j] = nup(np.maximum(c.rl[:, j] / k, c.rh[:, j] / k))
    return FourierChebSeq(out, phi.K, phi.nu)


def _imul_sc_vec(ks, lo, hi):
    p1 = lo * ks
    p2 = hi * ks
    return nd(np.minimum(p1, p2)), nup(np.maximum(p1, p2))


# ---------------------------------------------------------------------------
# evaluation


def eval_cheb(psi: ChebSeq, eta: Interval) -> RectComplex:
    """Clenshaw evaluation with interval argument; eta must lie in [-1, 1]."""
    if eta.lo < -1.0 - 1e-13 or eta.hi > 1.0 + 1e-13:
        raise DomainError(f"eta {eta!r} outside [-1, 1]")
    eta = eta.intersect(Interval(-1.0, 1.0))
    two_eta = eta * 2.0
    b1 = RectComplex(Interval(0.0))
    b2 = RectComplex(Interval(0.0))
    for n in range(psi.deg, 0, -1):
        b1, b2 = psi.entry(n) * 2.0 + two_eta * b1 - b2, b1
    return psi.entry(0) + eta * b1 - b2


def eval_fc(phi: FourierChebSeq, t: Interval, eta: Interval) -> RectComplex:
    """Evaluate phi(t, eta): sum over modes of e^{-ikt} times the mode value."""
    out = RectComplex(Interval(0.0))
    for k in range(-phi.K, phi.K + 1):
        col = eval_cheb(phi.mode(k), eta)
        kt = t * float(k)
        ph = RectComplex(kt.cos(), -kt.sin())
        out = out + ph * col
    return out


# ---------------------------------------------------------------------------
# Neumann-series inversion certificates


def reciprocal_defect(phi_bar, phi_inv_bar) -> FourierChebSeq:
    """The series 1 - phi * phi_inv."""
    nu_ = phi_bar.nu
    a = as_fc(phi_bar, nu_)
    b = as_fc(phi_inv_bar, nu_)
    return FourierChebSeq.one(nu_) - fc_mul(a, b)


def neumann_inverse_error(phi_bar, phi_inv_bar, defect: FourierChebSeq | None = None,
                          cheap: bool = False) -> Interval:
    """Bound ||phi_inv - phi^{-1}|| given an approximate reciprocal.

    Requires ||1 - phi*phi_inv|| < 1; the bound is
    ||phi_inv (1 - phi phi_inv)|| / (1 - ||1 - phi phi_inv||).
    With ``cheap`` the numerator is relaxed to the product of norms.
    """
    nu_ = phi_bar.nu
    b = as_fc(phi_inv_bar, nu_)
    if defect is None:
        defect = reciprocal_defect(phi_bar, phi_inv_bar)
    d = norm_W(defect)
    if not d.hi < 1.0:
        raise NotInvertibleCandidate(f"||1 - phi phi_inv|| = {d.hi} >= 1")
    num = norm_W(b) * d if cheap else norm_W(fc_mul(b, defect))
    return Interval(0.0, (num / (Interval(1.0) - d)).hi)


def ball_inverse_bound(phi_bar, phi_inv_bar, R: float,
                       defect: FourierChebSeq | None = None) -> Interval:
    """Uniform bound on ||phi^{-1}|| over the ball of radius R around phi_bar."""
    nu_ = phi_bar.nu
    b = as_fc(phi_inv_bar, nu_)
    if defect is None:
        defect = reciprocal_defect(phi_bar, phi_inv_bar)
    d = norm_W(defect)
    bn = norm_W(b)
    den = Interval(1.0) - d - bn * Interval(R)
    if not den.lo > 0.0:
        raise BallNotInvertible(
            f"||1 - phi phi_inv|| + R ||phi_inv|| = {(d + bn * Interval(R)).hi} >= 1")
    return Interval(0.0, (bn / den).hi)


# ---------------------------------------------------------------------------
# series with a norm-bounded remainder


class BallSeries:
    """A finite series plus an unknown remainder of norm at most ``slack``.

    Closed under the ring operations with slack propagated by the Banach
    algebra inequality; this is how division by certified reciprocals and
    ball enclosures enter otherwise polynomial expressions.
    """

    __slots__ = ("series", "slack")

    def __init__(self, series: FourierChebSeq, slack: float = 0.0):
        self.series = series
        self.slack = float(slack)
        assert self.slack >= 0.0

    @classmethod
    def exact(cls, series) -> "BallSeries":
        return cls(as_fc(series, series.nu), 0.0)

    def __add__(self, other):
        o = other if isinstance(other, BallSeries) else BallSeries.exact(other)
        return BallSeries(self.series + o.series, _fadd_up(self.slack, o.slack))

    def __sub__(self, other):
        o = other if isinstance(other, BallSeries) else BallSeries.exact(other)
        return BallSeries(self.series - o.series, _fadd_up(self.slack, o.slack))

    def __neg__(self):
        return BallSeries(-self.series, self.slack)

    def mul(self, other) -> "BallSeries":
        o = other if isinstance(other, BallSeries) else BallSeries.exact(other)
        prod = fc_mul(self.series, o.series)
        cross = (norm_W(self.series) * Interval(o.slack)
                 + norm_W(o.series) * Interval(self.slack)
                 + Interval(self.slack) * Interval(o.slack))
        return BallSeries(prod, cross.hi)

    def scale(self, c) -> "BallSeries":
        mag = c.mag if isinstance(c, Interval) else \
            (c.abs_upper() if isinstance(c, RectComplex) else abs(complex(c)))
        return BallSeries(self.series.scale(c), nup(np.float64(self.slack * mag)).item())

    def norm_upper(self) -> float:
        return _fadd_up(norm_W(self.series).hi, self.slack)

    def inflate(self, extra: float) -> "BallSeries":
        return BallSeries(self.series, _fadd_up(self.slack, extra))


def _fadd_up(a: float, b: float) -> float:
    return float(nup(np.float64(a) + np.float64(b)))


# ---------------------------------------------------------------------------
# build-time convention self-test: d/dt of sin(t) must be cos(t)


def _convention_self_test():
    nu_ = 1.05
    c = np.zeros((1, 3), dtype=np.complex128)
    c[0, 0] = -0.5j     # mode k = -1 of sin t
    c[0, 2] = +0.5j     # mode k = +1
    sin_t = FourierChebSeq.from_floats(c, 1, nu_)
    d = dt(sin_t)
    cos_c = np.zeros((1, 3), dtype=np.complex128)
    cos_c[0, 0] = 0.5
    cos_c[0, 2] = 0.5
    err = norm_W(d - FourierChebSeq.from_floats(cos_c, 1, nu_))
    if not err.hi < 1e-14:
        raise AssertionError("Fourier differentiation convention is inconsistent")


_convention_self_test()
