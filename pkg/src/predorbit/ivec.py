"""Vectorized containment arithmetic on arrays of rectangular complex intervals.

Two representations are used:

* ``CRect`` -- four float64 arrays (re/im lower/upper endpoints).  Exact for
  additive operations, used for coefficient containers and convolutions.
* midpoint/radius pairs (complex midpoint array, nonnegative radius array)
  -- used for large matrix products, where the product of midpoints is done
  by one BLAS call in round-to-nearest and the radius picks up both the
  input radii and a rigorous bound on the accumulated floating-point error
  (valid for any summation order, FMA included).

All nudges use ``numpy.nextafter``; radius terms additionally absorb
underflow via a tiny absolute slack.
"""

from __future__ import annotations

import numpy as np

_INF = np.inf
_U = 2.0 ** -53          # unit roundoff, float64
_ETA = 1e-315            # absolute slack absorbing gradual underflow


def nd(x):
    return np.nextafter(x, -_INF)


def nu(x):
    return np.nextafter(x, _INF)


def gamma_n(n: int) -> float:
    """Upper bound for n*u/(1-n*u), padded."""
    t = (n + 4) * _U
    return t / (1.0 - t) * (1.0 + 8.0 * _U)


F128 = np.longdouble


def f64_down(x):
    """Largest float64 array <= x (x may be extended precision)."""
    c = np.asarray(x, dtype=np.float64)
    return np.where(c <= x, c, np.nextafter(c, -_INF))


def f64_up(x):
    """Smallest float64 array >= x."""
    c = np.asarray(x, dtype=np.float64)
    return np.where(c >= x, c, np.nextafter(c, _INF))


def sum_up(x, axis=None):
    """Upper bound for the exact sum of float entries (any sign)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[axis] if axis is not None else x.size
    s = x.sum(axis=axis)
    a = np.abs(x).sum(axis=axis)
    return nu(s + nu(gamma_n(n) * a + _ETA))


def _imul(al, ah, bl, bh):
    """Interval multiply on endpoint arrays."""
    p1 = al * bl
    p2 = al * bh
    p3 = ah * bl
    p4 = ah * bh
    lo = nd(np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)))
    hi = nu(np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)))
    return lo, hi


class CRect:
    """Array of rectangular complex intervals."""

    __slots__ = ("rl", "rh", "il", "ih")

    def __init__(self, rl, rh, il, ih):
        self.rl = rl
        self.rh = rh
        self.il = il
        self.ih = ih

    @classmethod
    def zeros(cls, shape, dtype=None):
        dtype = F128 if dtype is None else dtype
        return cls(np.zeros(shape, dtype), np.zeros(shape, dtype),
                   np.zeros(shape, dtype), np.zeros(shape, dtype))

    @classmethod
    def from_complex(cls, z, dtype=None):
        """Point rectangles from exact float data (embedding is exact)."""
        dtype = F128 if dtype is None else dtype
        z = np.asarray(z, dtype=np.complex128)
        re = np.asarray(z.real, dtype=dtype)
        im = np.asarray(z.imag, dtype=dtype)
        return cls(re.copy(), re.copy(), im.copy(), im.copy())

    @property
    def shape(self):
        return self.rl.shape

    def copy(self):
        return CRect(self.rl.copy(), self.rh.copy(), self.il.copy(), self.ih.copy())

    def __getitem__(self, idx):
        return CRect(self.rl[idx], self.rh[idx], self.il[idx], self.ih[idx])

    def set_slice(self, idx, other: "CRect"):
        self.rl[idx] = other.rl
        self.rh[idx] = other.rh
        self.il[idx] = other.il
        self.ih[idx] = other.ih

    def add(self, other: "CRect") -> "CRect":
        return CRect(nd(self.rl + other.rl), nu(self.rh + other.rh),
                     nd(self.il + other.il), nu(self.ih + other.ih))

    def sub(self, other: "CRect") -> "CRect":
        return CRect(nd(self.rl - other.rh), nu(self.rh - other.rl),
                     nd(self.il - other.ih), nu(self.ih - other.il))

    def neg(self) -> "CRect":
        return CRect(-self.rh, -self.rl, -self.ih, -self.il)

    def conj(self) -> "CRect":
        return CRect(self.rl, self.rh, -self.ih, -self.il)

    def iadd(self, idx, other: "CRect"):
        """In-place slice accumulation with outward rounding."""
        self.rl[idx] = nd(self.rl[idx] + other.rl)
        self.rh[idx] = nu(self.rh[idx] + other.rh)
        self.il[idx] = nd(self.il[idx] + other.il)
        self.ih[idx] = nu(self.ih[idx] + other.ih)

    def mul(self, other: "CRect") -> "CRect":
        rr_lo, rr_hi = _imul(self.rl, self.rh, other.rl, other.rh)
        ii_lo, ii_hi = _imul(self.il, self.ih, other.il, other.ih)
        ri_lo, ri_hi = _imul(self.rl, self.rh, other.il, other.ih)
        ir_lo, ir_hi = _imul(self.il, self.ih, other.rl, other.rh)
        return CRect(nd(rr_lo - ii_hi), nu(rr_hi - ii_lo),
                     nd(ri_lo + ir_lo), nu(ri_hi + ir_hi))

    def scale_real(self, lo: float, hi: float) -> "CRect":
        """Multiply by the real interval [lo, hi]."""
        rlo, rhi = _imul(self.rl, self.rh, np.float64(lo), np.float64(hi))
        ilo, ihi = _imul(self.il, self.ih, np.float64(lo), np.float64(hi))
        return CRect(rlo, rhi, ilo, ihi)

    def sup_abs(self):
        """Entrywise upper bound of |z|."""
        mre = np.maximum(np.abs(self.rl), np.abs(self.rh))
        mim = np.maximum(np.abs(self.il), np.abs(self.ih))
        h = np.hypot(mre, mim)
        return nu(nu(nu(h)))

    def inf_abs(self):
        """Entrywise lower bound of |z|."""
        mre = np.where((self.rl <= 0.0) & (self.rh >= 0.0), 0.0,
                       np.minimum(np.abs(self.rl), np.abs(self.rh)))
        mim = np.where((self.il <= 0.0) & (self.ih >= 0.0), 0.0,
                       np.minimum(np.abs(self.il), np.abs(self.ih)))
        h = np.hypot(mre, mim)
        return np.maximum(nd(nd(nd(h))), 0.0)

    def widths(self):
        return np.maximum(nu(self.rh - self.rl), nu(self.ih - self.il))

    def contains_zero(self):
        return ((self.rl <= 0.0) & (self.rh >= 0.0) &
                (self.il <= 0.0) & (self.ih >= 0.0))

    def to_midrad(self):
        mre = self.rl + 0.5 * (self.rh - self.rl)
        mim = self.il + 0.5 * (self.ih - self.il)
        rr = np.maximum(nu(self.rh - mre), nu(mre - self.rl))
        ri = np.maximum(nu(self.ih - mim), nu(mim - self.il))
        rad = nu(nu(np.hypot(rr, ri)))
        return mre + 1j * mim, rad

    def to_midrad64(self):
        """Outward-converted float64 midpoint/radius (complex128, float64)."""
        r = CRect(f64_down(self.rl), f64_up(self.rh), f64_down(self.il), f64_up(self.ih))
        mid, rad = r.to_midrad()
        return np.asarray(mid, dtype=np.complex128), np.asarray(rad, dtype=np.float64)


def from_midrad(mid, rad) -> CRect:
    re = mid.real
    im = mid.imag
    return CRect(nd(re - rad), nu(re + rad), nd(im - rad), nu(im + rad))


def _abs_up(z):
    """Upper bound of |z| for complex arrays (round-to-nearest abs, padded)."""
    a = np.abs(z)
    return nu(a + nu(4.0 * _U * a + _ETA))


def cgemm_midrad(am, ar, bm, br):
    """Rigorous product of complex interval matrices in midpoint/radius form.

    am, bm: complex128 midpoints; ar, br: float64 radii (disc semantics).
    Returns (cm, cr) with A*B contained in discs(cm, cr) for all members.
    """
    inner = am.shape[-1]
    g = gamma_n(8 * (inner + 4))
    cm = am @ bm
    abs_am = _abs_up(am)
    abs_bm = _abs_up(bm)
    p = abs_am @ abs_bm
    scale = 1.0 + g
    fp_err = nu(p * g * scale + _ETA)
    r1 = abs_am @ br
    r2 = ar @ nu(abs_bm + br)
    cr = nu((r1 + r2) * scale + fp_err)
    return cm, cr


def conv_shift_product(a2m, a2r, w2m, w2r):
    """Apply a matrix of polynomial multiplication operators to a batch.

    a2: [rows, cols, S]   (two-sided coefficient index s = 0..S-1)
    w2: [cols, M, C]      (coefficient index m, batch column c)
    out[r, p, c] = sum_{s+m=p} sum_j a2[r, j, s] * w2[j, m, c],  p = 0..S+M-2.

    Midpoint accumulation is round-to-nearest over the S shifted GEMMs; the
    returned radius covers input radii, per-GEMM floating error, and the
    accumulation error across shifts.
    """
    rows, cols, s_len = a2m.shape
    cols2, m_len, ncols = w2m.shape
    assert cols == cols2
    p_len = s_len + m_len - 1
    outm = np.zeros((rows, p_len, ncols), dtype=np.complex128)
    outr = np.zeros((rows, p_len, ncols))
    outa = np.zeros((rows, p_len, ncols))
    wm_flat = w2m.reshape(cols, m_len * ncols)
    wr_flat = w2r.reshape(cols, m_len * ncols)
    for s in range(s_len):
        cm, cr = cgemm_midrad(a2m[:, :, s], a2r[:, :, s], wm_flat, wr_flat)
        cm = cm.reshape(rows, m_len, ncols)
        cr = cr.reshape(rows, m_len, ncols)
        sl = slice(s, s + m_len)
        outm[:, sl, :] += cm
        outr[:, sl, :] += cr
        outa[:, sl, :] += np.abs(cm)
    g = gamma_n(s_len + 4)
    rad = nu(outr * (1.0 + g) + nu(g * outa + _ETA))
    return outm, rad
