"""Rigorous contraction bounds for the branch zero-finding map.

The three bounds follow the operator splitting used to build the
approximate inverse A = A_finite on low modes plus the exact tail inverse
of d_t on high modes:

    Y  >= ||A F(chi_bar)||,
    Z1 >= ||A DF(chi_bar) - I||,
    Z2 >= sup over the R-ball of ||A D^2 F||,

and feed the radii inequality 2 Y Z2 <= (1 - Z1)^2, Z1 < 1, whose
admissible radii form the interval

    [ 2Y / (1 - Z1 + sqrt((1-Z1)^2 - 2 Y Z2)),  min((1-Z1)/Z2, R) ).
"""

from __future__ import annotations

import math

import numpy as np

from . import ivec, model
from .errors import ContractionFailed
from .interval import Interval
from .ivec import CRect
from .seqspace import (BallSeries, ChebSeq, FourierChebSeq, as_fc, dt,
                       norm_P, norm_W)
from .zero_problem import BranchPoint, PhaseReference, phase_rho


# ---------------------------------------------------------------------------
# weighted norms of two-sided midrad arrays


def _nu_weights_two_sided(nu: float, half: int):
    """Upper endpoints of nu^{|s|} for s = -half..half."""
    pows_hi = np.empty(half + 1)
    p = Interval(1.0)
    for n in range(half + 1):
        pows_hi[n] = p.hi
        p = p * Interval(nu)
    idx = np.abs(np.arange(-half, half + 1))
    return pows_hi[idx]


def _abs_up(mid, rad):
    a = np.abs(mid)
    return ivec.nu(a + ivec.nu(4.0 * (2.0 ** -53) * a + rad))


def _col_norms(mid, rad, nu: float):
    """Column sums of weighted coefficient norms: input [slots, p, cols]."""
    half = (mid.shape[1] - 1) // 2
    w = _nu_weights_two_sided(nu, half)
    a = ivec.nu(_abs_up(mid, rad) * w[None, :, None])
    return ivec.sum_up(a.reshape(-1, a.shape[-1]), axis=0)


# ---------------------------------------------------------------------------
# operator norm of the interpolated finite part


def operator_norm_A(A_cheb: np.ndarray, nu: float, K: int) -> Interval:
    """||A|| = max(||A_finite||, 1/(K+1)) in the weighted slot norm.

    The finite-part norm is the maximum over columns of the summed entry
    norms; for a matrix of eta-multiplication operators the supremum over
    basis inputs is attained on the constant polynomial of each slot.
    """
    deg = A_cheb.shape[-1] - 1
    w_hi = np.empty(deg + 1)
    w_lo = np.empty(deg + 1)
    p = Interval(1.0)
    for n in range(deg + 1):
        scale = Interval(1.0) if n == 0 else Interval(2.0)
        w_hi[n] = (p * scale).hi
        w_lo[n] = (p * scale).lo
        p = p * Interval(nu)
    a = np.abs(A_cheb)
    a_hi = ivec.nu(a + ivec.nu(4.0 * (2.0 ** -53) * a))
    a_lo = np.maximum(ivec.nd(a - ivec.nu(4.0 * (2.0 ** -53) * a)), 0.0)
    ent_hi = ivec.sum_up(ivec.nu(a_hi * w_hi), axis=-1)
    col_hi = ivec.sum_up(ent_hi, axis=0)
    ent_lo = -ivec.sum_up(-ivec.nd(a_lo * w_lo), axis=-1)
    col_lo = -ivec.sum_up(-np.maximum(ent_lo, 0.0), axis=0)
    fin = Interval(float(np.max(col_lo)), float(np.max(col_hi)))
    tail = Interval(1.0) / Interval(K + 1)
    lo = max(fin.lo, tail.lo)
    hi = max(fin.hi, tail.hi)
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# slot bookkeeping for the branch problem


class _Slots:
    """Index maps for (scalar, component, Fourier mode) slot vectors."""

    def __init__(self, n_scalar: int, n_comp: int, band: int):
        self.n_scalar = n_scalar
        self.n_comp = n_comp
        self.band = band
        self.nk = 2 * band + 1
        self.total = n_scalar + n_comp * self.nk

    def u(self, comp: int, k: int) -> int:
        return self.n_scalar + comp * self.nk + (k + self.band)

    def mode_of(self, idx: int):
        if idx < self.n_scalar:
            return None, None
        r = idx - self.n_scalar
        return r // self.nk, r % self.nk - self.band


def _two_sided_cheb(stored: np.ndarray) -> np.ndarray:
    """Map stored coefficients (last axis n = 0..N) to s = -N..N."""
    n1 = stored.shape[-1]
    idx = np.abs(np.arange(-(n1 - 1), n1))
    return stored[..., idx]


class BoundContext:
    """Shared rigorous data for the Y/Z1/Z2 computations at one weight."""

    def __init__(self, chi_bar: BranchPoint, pack, pc: model.ParamCurves,
                 ref: PhaseReference, recips: model.Reciprocals):
        self.chi = chi_bar
        self.pack = pack
        self.pc = pc
        self.ref = ref
        self.recips = recips
        self.nu = chi_bar.nu
        self.K = pack.K
        self.N = pack.N
        self.normA = operator_norm_A(pack.A_cheb, self.nu, self.K)
        self._field = None
        self._jac = None

    def field(self):
        if self._field is None:
            self._field = model.vector_field(self.pc, self.chi.zeta1, self.chi.zeta2,
                                             self.chi.u, self.recips)
        return self._field

    def jac(self):
        if self._jac is None:
            self._jac = model.jacobian_u(self.pc, self.chi.zeta1, self.chi.zeta2,
                                         self.chi.u, self.recips)
        return self._jac

    def tau_ball(self) -> BallSeries:
        return BallSeries.exact(as_fc(self.chi.tau, self.nu))

    def omega_fc(self, arr) -> FourierChebSeq:
        return FourierChebSeq.from_floats(arr, self.K, self.nu)


def make_context(chi_bar: BranchPoint, pack, pc, ref) -> BoundContext:
    inv = tuple(FourierChebSeq.from_floats(pack.recip[j], 2 * pack.K, chi_bar.nu)
                for j in range(2))
    recips = model.certify_reciprocals(pc, chi_bar.u[2], inv)
    return BoundContext(chi_bar, pack, pc, ref, recips)


# ---------------------------------------------------------------------------
# Y bound


def bound_Y(ctx: BoundContext) -> Interval:
    """||A W0|| plus ||A|| times the field-approximation defect."""
    nu, K, N = ctx.nu, ctx.K, ctx.N
    slots = _Slots(3, 3, K)
    # W0: the constraint series and d_t u - omega_0, all modes <= K
    rho = phase_rho(ctx.chi.u, ctx.ref, N, K)
    deg_m = max(max(r.deg for r in rho), N)
    m_len = 2 * deg_m + 1
    wm = np.zeros((slots.total, m_len, 1), dtype=np.complex128)
    wr = np.zeros((slots.total, m_len, 1))
    for i, r in enumerate(rho):
        mid, rad = _two_sided_crect(r.coeffs, deg_m)
        wm[i, :, 0] = mid
        wr[i, :, 0] = rad
    for j in range(3):
        dj = dt(ctx.chi.u[j]) - ctx.omega_fc(ctx.pack.w0[j])
        cm, cr = dj.coeffs.to_midrad()
        two = _two_sided_cheb(np.moveaxis(cm, 0, -1))
        twor = _two_sided_cheb(np.moveaxis(cr, 0, -1))
        pad = deg_m - dj.deg
        for kk in range(-K, K + 1):
            row = slots.u(j, kk)
            wm[row, pad:m_len - pad, 0] = two[kk + K]
            wr[row, pad:m_len - pad, 0] = twor[kk + K]
    a2m, a2r = _pack_two_sided(ctx.pack.A_cheb)
    outm, outr = ivec.conv_shift_product(a2m, a2r, wm, wr)
    aw0 = Interval(0.0, float(_col_norms(outm, outr, nu)[0]))

    f = ctx.field()
    tau = ctx.tau_ball()
    defect = Interval(0.0)
    for j in range(3):
        tf = tau.mul(f[j])
        diff = tf.series - ctx.omega_fc(ctx.pack.w0[j])
        defect = defect + Interval(0.0, norm_W(diff).hi) + Interval(tf.slack)
    return aw0 + ctx.normA * defect


def _two_sided_crect(c: CRect, deg_m: int):
    mid, rad = c.to_midrad()
    two_m = _two_sided_cheb(mid)
    two_r = _two_sided_cheb(rad)
    pad = deg_m - (c.rl.shape[0] - 1)
    if pad:
        two_m = np.pad(two_m, (pad, pad))
        two_r = np.pad(two_r, (pad, pad))
    return two_m, two_r


def _pack_two_sided(A_cheb: np.ndarray):
    a2 = _two_sided_cheb(A_cheb)
    return a2, np.zeros_like(a2, dtype=np.float64)


# ---------------------------------------------------------------------------
# Z1 bound


def bound_Z1(ctx: BoundContext, col_batch: int = 256) -> tuple[Interval, dict]:
    """Finite banded product plus tail term plus derivative-approximation defect."""
    nu, K, N = ctx.nu, ctx.K, ctx.N
    fin = _z1_finite(ctx, col_batch)
    w1_colsums = []
    for j in range(3):
        s = Interval(0.0)
        for i in range(3):
            s = s + Interval(0.0, norm_W(ctx.omega_fc(ctx.pack.w1[i, j])).hi)
        w1_colsums.append(s)
    tail_term = max(w1_colsums, key=lambda iv: iv.hi) / Interval(K + 1)
    aw1 = Interval(max(fin.lo, tail_term.lo), max(fin.hi, tail_term.hi))

    defect = _omega_defects(ctx)
    z1 = aw1 + ctx.normA * defect["max"]
    info = {"finite": fin, "tail": tail_term, "defect": defect}
    return z1, info


def _omega_defects(ctx: BoundContext) -> dict:
    """Norm defects of the banded approximations of the four derivative blocks."""
    nu = ctx.nu
    f = ctx.field()
    jac = ctx.jac()
    tau = ctx.tau_ball()
    d2 = Interval(0.0)
    for j in range(3):
        fj = f[j]
        diff = fj.series - ctx.omega_fc(ctx.pack.w2[j])
        d2 = d2 + Interval(0.0, norm_W(diff).hi) + Interval(fj.slack)
    dz_terms = []
    for m, w_m in ((1, ctx.pack.w3), (2, ctx.pack.w4)):
        dz = model.dzeta_field(ctx.pc, ctx.chi.u, ctx.recips, m)
        s = Interval(0.0)
        for j in range(3):
            t = tau.mul(dz[j])
            diff = t.series - ctx.omega_fc(w_m[j])
            s = s + Interval(0.0, norm_W(diff).hi) + Interval(t.slack)
        dz_terms.append(s)
    dz1, dz2 = dz_terms
    # columns of the state block: max over j of the summed entry defects
    jcol = Interval(0.0)
    jac_defects = np.zeros((3, 3))
    for j in range(3):
        s = Interval(0.0)
        for i in range(3):
            t = tau.mul(jac[i][j])
            diff = t.series - ctx.omega_fc(ctx.pack.w1[i, j])
            ent = Interval(0.0, norm_W(diff).hi) + Interval(t.slack)
            jac_defects[i, j] = ent.hi
            s = s + ent
        jcol = Interval(max(jcol.lo, s.lo), max(jcol.hi, s.hi))
    biggest = max((d2, dz1, dz2, jcol), key=lambda iv: iv.hi)
    return {"f": d2, "dzeta1": dz1, "dzeta2": dz2, "jac": jcol,
            "jac_entries": jac_defects, "max": biggest}


def _z1_finite(ctx: BoundContext, col_batch: int) -> Interval:
    """Norm of Pi_{2N,3K} A Pi_{N,3K} W1 Pi_{0,2K} - Pi_{0,2K} over its columns."""
    nu, K, N = ctx.nu, ctx.K, ctx.N
    in_slots = _Slots(3, 3, K)        # A_finite domain
    w_slots = _Slots(3, 3, 3 * K)     # image of W1 on the column set
    cols = _Slots(3, 3, 2 * K)        # probed columns
    m_len = 2 * N + 1

    g_two = _ref_conj_two_sided(ctx)      # (3, 2K+1, m_len) mids + rad
    g_two_m, g_two_r = g_two
    w1 = ctx.pack.w1

    best = 0.0
    for start in range(0, cols.total, col_batch):
        stop = min(start + col_batch, cols.total)
        nb = stop - start
        wm = np.zeros((w_slots.total, m_len, nb), dtype=np.complex128)
        wr = np.zeros((w_slots.total, m_len, nb))
        for c in range(start, stop):
            _fill_w1_column(ctx, wm, wr, w_slots, cols, c, c - start, g_two_m, g_two_r)
        # cover round-to-nearest accumulation while the columns were filled
        wr = ivec.nu(wr + 8.0 * (2.0 ** -53) * np.abs(wm))
        # finite part: rows with |k| <= K
        sel = _selection(w_slots, in_slots)
        a2m, a2r = _pack_two_sided(ctx.pack.A_cheb)
        outm, outr = ivec.conv_shift_product(a2m, a2r, wm[sel], wr[sel])
        # tail part: rows with K < |k| <= 3K scaled by 1/(-i k)
        tail_m, tail_r = _tail_scale(wm, wr, w_slots, K)
        # subtract identity at the probed column slots
        p_center_fin = (outm.shape[1] - 1) // 2
        p_center_tail = (tail_m.shape[1] - 1) // 2
        for c in range(start, stop):
            comp, k = cols.mode_of(c)
            if comp is None:
                row = c
                outm[row, p_center_fin, c - start] -= 1.0
                outr[row, p_center_fin, c - start] = ivec.nu(
                    outr[row, p_center_fin, c - start] + 1e-15)
            elif abs(k) <= K:
                row = in_slots.u(comp, k)
                outm[row, p_center_fin, c - start] -= 1.0
                outr[row, p_center_fin, c - start] = ivec.nu(
                    outr[row, p_center_fin, c - start] + 1e-15)
            else:
                row = w_slots.u(comp, k)
                tail_m[row, p_center_tail, c - start] -= 1.0
                tail_r[row, p_center_tail, c - start] = ivec.nu(
                    tail_r[row, p_center_tail, c - start] + 1e-15)
        norms = _col_norms(outm, outr, nu) + _col_norms(tail_m, tail_r, nu)
        best = max(best, float(np.max(ivec.nu(norms))))
    return Interval(0.0, best)


def _selection(w_slots: _Slots, in_slots: _Slots) -> np.ndarray:
    """Row indices of the W image feeding the finite part, in A slot order."""
    idx = list(range(in_slots.n_scalar))
    for comp in range(in_slots.n_comp):
        for k in range(-in_slots.band, in_slots.band + 1):
            idx.append(w_slots.u(comp, k))
    return np.asarray(idx)


def _tail_scale(wm, wr, w_slots: _Slots, K: int):
    """Apply the tail inverse of d_t to rows with |k| > K (others zeroed)."""
    out_m = np.zeros_like(wm)
    out_r = np.zeros_like(wr)
    for comp in range(w_slots.n_comp):
        for k in range(-w_slots.band, w_slots.band + 1):
            if abs(k) <= K:
                continue
            row = w_slots.u(comp, k)
            # multiply by i/k: exact complex rotation over floats
            out_m[row] = wm[row] * (1j / k)
            err = np.abs(wm[row]) * (2.0 ** -52 / abs(k))
            out_r[row] = ivec.nu(wr[row] / abs(k) + err)
    return out_m, out_r


def _ref_conj_two_sided(ctx: BoundContext):
    """2*pi times the conjugated phase-reference coefficients, two-sided in n."""
    N = ctx.N
    m_len = 2 * N + 1
    gm = np.zeros((3, 2 * ctx.K + 1, m_len), dtype=np.complex128)
    gr = np.zeros((3, 2 * ctx.K + 1, m_len))
    two_pi = Interval.two_pi()
    for j in range(3):
        gj = ctx.ref.g[j]
        for k in range(-gj.K, gj.K + 1):
            series = gj.mode(k).conj().scale(two_pi).pad(N)
            mid, rad = series.coeffs.to_midrad()
            gm[j, k + ctx.K] = _two_sided_cheb(mid)
            gr[j, k + ctx.K] = _two_sided_cheb(rad)
    return gm, gr


def _fill_w1_column(ctx: BoundContext, wm, wr, w_slots: _Slots, cols: _Slots,
                    c: int, c_local: int, g_two_m, g_two_r):
    """Write the W1 image of basis column c into the batch arrays."""
    K, N = ctx.K, ctx.N
    m_len = wm.shape[1]
    comp, k = cols.mode_of(c)
    if comp is None:
        w = (ctx.pack.w2, ctx.pack.w3, ctx.pack.w4)[c]
        for j in range(3):
            stored = w[j]                      # (N+1, 2K+1)
            two = _two_sided_cheb(np.moveaxis(stored, 0, -1))  # (2K+1, 2N+1)
            for kk in range(-K, K + 1):
                row = w_slots.u(j, kk)
                wm[row, :, c_local] -= two[kk + K]
        return
    # constraint rows
    if abs(k) <= K:
        wm[0, :, c_local] += g_two_m[comp, k + K]
        wr[0, :, c_local] = ivec.nu(wr[0, :, c_local] + g_two_r[comp, k + K])
        if comp in (0, 1):
            wm[1 + comp, (m_len - 1) // 2, c_local] += 1.0
    # d_t entry
    row = w_slots.u(comp, k)
    wm[row, (m_len - 1) // 2, c_local] += -1j * k
    # -omega_1 block, shifted by k
    for i in range(3):
        stored = ctx.pack.w1[i, comp]
        two = _two_sided_cheb(np.moveaxis(stored, 0, -1))
        for kk in range(-K, K + 1):
            tgt = k + kk
            if abs(tgt) > w_slots.band:
                continue
            row = w_slots.u(i, tgt)
            wm[row, :, c_local] -= two[kk + K]


# ---------------------------------------------------------------------------
# Z2 bound


def bound_Z2(ctx: BoundContext, R: float) -> tuple[Interval, "model.SecondDerivativeTable"]:
    table = model.second_derivative_norms(ctx.pc, R, ctx.chi, ctx.recips)
    z2 = ctx.normA * table.d2f_bound()
    return Interval(0.0, z2.hi), table


# ---------------------------------------------------------------------------
# radii inequality


class NKBounds:
    """Verified contraction data: the three bounds and the admissible radii."""

    def __init__(self, Y, Z1, Z2, R, r_min, r_max, nu, verified, r_reported):
        self.Y = Y
        self.Z1 = Z1
        self.Z2 = Z2
        self.R = R
        self.r_min = r_min
        self.r_max = r_max
        self.nu = nu
        self.verified = verified
        self.r_reported = r_reported


def _frac_to_float_up(fr) -> float:
    f = float(fr)
    from fractions import Fraction
    return f if Fraction(f) >= fr else math.nextafter(f, math.inf)


def _frac_to_float_down(fr) -> float:
    f = float(fr)
    from fractions import Fraction
    return f if Fraction(f) <= fr else math.nextafter(f, -math.inf)


def verify_contraction(Y: Interval, Z1: Interval, Z2: Interval, R: float,
                       nu: float = float("nan")) -> NKBounds:
    """Check the radii inequalities for the upper-bound constants.

    The discriminant and quotients are evaluated in exact rational
    arithmetic (the constants are floats); the square root is bracketed to
    one ulp, so the returned radii carry a single rounding each.
    """
    from fractions import Fraction

    y, z1, z2 = Y.hi, Z1.hi, Z2.hi
    if not z1 < 1.0:
        raise ContractionFailed(f"Z1 = {z1} >= 1")
    fy, fz1, fz2 = Fraction(y), Fraction(z1), Fraction(z2)
    om = 1 - fz1
    disc = om * om - 2 * fy * fz2
    if disc < 0:
        raise ContractionFailed(
            f"2*Y*Z2 = {float(2 * fy * fz2)} > (1 - Z1)^2 = {float(om * om)}")
    s_approx = math.sqrt(float(disc))
    s_lo = math.nextafter(s_approx, -math.inf)
    while Fraction(s_lo) * Fraction(s_lo) > disc:
        s_lo = math.nextafter(s_lo, -math.inf)
    s_hi = math.nextafter(s_approx, math.inf)
    while Fraction(s_hi) * Fraction(s_hi) < disc:
        s_hi = math.nextafter(s_hi, math.inf)
    if fz2 > 0:
        r_min = _frac_to_float_up(2 * fy / (om + Fraction(s_lo)))
        r_max = min(_frac_to_float_down(om / fz2), R)
    else:
        r_min = _frac_to_float_up(fy / om)
        r_max = R
    if not r_min < r_max:
        raise ContractionFailed(f"empty radii interval: r_min={r_min}, r_max={r_max}")
    r_reported = _report_radius(r_min, r_max)
    return NKBounds(Y, Z1, Z2, R, r_min, r_max, nu, True, r_reported)


def _report_radius(r_min: float, r_max: float) -> float:
    if r_min <= 0.0:
        return r_min
    p = 10.0 ** math.ceil(math.log10(r_min))
    if r_min <= p < r_max:
        return p
    return r_min


def compute_bounds(chi_bar: BranchPoint, pack, pc, ref, R: float) -> tuple[NKBounds, dict]:
    """Full rigorous pipeline: Y, Z1, Z2 and the radii verdict."""
    ctx = make_context(chi_bar, pack, pc, ref)
    Y = bound_Y(ctx)
    Z1, z1_info = bound_Z1(ctx)
    Z2, table = bound_Z2(ctx, R)
    nk = verify_contraction(Y, Z1, Z2, R, nu=ctx.nu)
    info = {"z1": z1_info, "normA": ctx.normA, "table": table, "ctx": ctx}
    return nk, info
