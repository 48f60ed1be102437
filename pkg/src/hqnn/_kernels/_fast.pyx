# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector / density-matrix kernels.

Big-endian basis ordering (qubit 0 is the most significant bit).  Ops tables
come from ``rules.encode_ops``: columns kind, target, control, slot.
"""
import numpy as np

from libc.math cimport cos, sin, sqrt, M_PI
from libc.string cimport memcpy

ctypedef double complex cplx

cdef double C_PLUS = (sqrt(2.0) + 1.0) / (4.0 * sqrt(2.0))
cdef double C_MINUS = (sqrt(2.0) - 1.0) / (4.0 * sqrt(2.0))
cdef double SQ = 1.0 / sqrt(2.0)


cdef inline void fill_block(int kind, double theta, cplx* m) noexcept nogil:
    cdef double c = cos(0.5 * theta)
    cdef double s = sin(0.5 * theta)
    if kind == 0 or kind == 6:
        m[0] = c; m[1] = -1j * s; m[2] = -1j * s; m[3] = c
    elif kind == 1:
        m[0] = c; m[1] = -s; m[2] = s; m[3] = c
    elif kind == 2 or kind == 7:
        m[0] = c - 1j * s; m[1] = 0; m[2] = 0; m[3] = c + 1j * s
    elif kind == 3:
        m[0] = SQ; m[1] = SQ; m[2] = SQ; m[3] = -SQ
    elif kind == 4:
        m[0] = 0; m[1] = 1; m[2] = 1; m[3] = 0
    else:
        m[0] = 1; m[1] = 0; m[2] = 0; m[3] = -1


cdef inline void sv_apply(cplx* psi, int dim, int tmask, int cmask, cplx* m) noexcept nogil:
    cdef int i, j
    cdef cplx a, b
    for i in range(dim):
        if (i & tmask) or ((i & cmask) != cmask):
            continue
        j = i | tmask
        a = psi[i]
        b = psi[j]
        psi[i] = m[0] * a + m[1] * b
        psi[j] = m[2] * a + m[3] * b


cdef inline void dm_apply_diag(cplx* rho, int dim, int tmask, int cmask, cplx* m) noexcept nogil:
    # diagonal U: rho_ij *= d_i conj(d_j)
    cdef int i, j
    cdef cplx d[4096]
    for i in range(dim):
        if (i & cmask) != cmask:
            d[i] = 1.0
        elif i & tmask:
            d[i] = m[3]
        else:
            d[i] = m[0]
    for i in range(dim):
        for j in range(dim):
            rho[i * dim + j] = rho[i * dim + j] * (d[i] * d[j].conjugate())


cdef inline void dm_apply(cplx* rho, int dim, int tmask, int cmask, cplx* m) noexcept nogil:
    # rho <- U rho U^dagger, U acting as m on target when control bits are set
    cdef int i, j, r
    cdef cplx a, b
    if m[1] == 0 and m[2] == 0:
        dm_apply_diag(rho, dim, tmask, cmask, m)
        return
    for i in range(dim):
        if (i & tmask) or ((i & cmask) != cmask):
            continue
        j = i | tmask
        for r in range(dim):
            a = rho[i * dim + r]
            b = rho[j * dim + r]
            rho[i * dim + r] = m[0] * a + m[1] * b
            rho[j * dim + r] = m[2] * a + m[3] * b
    for i in range(dim):
        if (i & tmask) or ((i & cmask) != cmask):
            continue
        j = i | tmask
        for r in range(dim):
            a = rho[r * dim + i]
            b = rho[r * dim + j]
            rho[r * dim + i] = m[0].conjugate() * a + m[1].conjugate() * b
            rho[r * dim + j] = m[2].conjugate() * a + m[3].conjugate() * b


cdef inline void dm_depol1(cplx* rho, int dim, int mask, double p) noexcept nogil:
    # (1 - 4p/3) rho + (4p/3) Tr_q(rho) (x) I/2
    cdef double lam = 1.0 - 4.0 * p / 3.0
    cdef int i, j
    cdef cplx s
    for i in range(dim):
        if i & mask:
            continue
        for j in range(dim):
            if j & mask:
                continue
            s = 0.5 * (1.0 - lam) * (rho[i * dim + j] + rho[(i | mask) * dim + (j | mask)])
            rho[i * dim + j] = lam * rho[i * dim + j] + s
            rho[(i | mask) * dim + (j | mask)] = lam * rho[(i | mask) * dim + (j | mask)] + s
            rho[i * dim + (j | mask)] = lam * rho[i * dim + (j | mask)]
            rho[(i | mask) * dim + j] = lam * rho[(i | mask) * dim + j]


cdef inline void dm_depol2(cplx* rho, int dim, int m1, int m2, double p) noexcept nogil:
    # (1 - 16p/15) rho + (16p/15) Tr_pair(rho) (x) I/4
    cdef double lam = 1.0 - 16.0 * p / 15.0
    cdef int i, j, a, b
    cdef int offs[4]
    cdef cplx s
    offs[0] = 0; offs[1] = m2; offs[2] = m1; offs[3] = m1 | m2
    for i in range(dim):
        if (i & m1) or (i & m2):
            continue
        for j in range(dim):
            if (j & m1) or (j & m2):
                continue
            s = 0
            for a in range(4):
                s = s + rho[(i | offs[a]) * dim + (j | offs[a])]
            s = 0.25 * (1.0 - lam) * s
            for a in range(4):
                for b in range(4):
                    rho[(i | offs[a]) * dim + (j | offs[b])] = lam * rho[(i | offs[a]) * dim + (j | offs[b])]
                rho[(i | offs[a]) * dim + (j | offs[a])] = rho[(i | offs[a]) * dim + (j | offs[a])] + s


cdef inline void sv_measure(cplx* psi, int dim, int nq, double* out) noexcept nogil:
    cdef int q, i, mask
    cdef double z, x, y
    cdef cplx a, b, w
    for q in range(nq):
        mask = 1 << (nq - 1 - q)
        z = 0; x = 0; y = 0
        for i in range(dim):
            if i & mask:
                continue
            a = psi[i]
            b = psi[i | mask]
            z += a.real * a.real + a.imag * a.imag - b.real * b.real - b.imag * b.imag
            w = a.conjugate() * b
            x += 2.0 * w.real
            y += 2.0 * w.imag
        out[q] = z
        out[nq + q] = x
        out[2 * nq + q] = y


cdef inline void dm_measure(cplx* rho, int dim, int nq, double* out) noexcept nogil:
    cdef int q, i, mask
    cdef double z, x, y
    cdef cplx w
    for q in range(nq):
        mask = 1 << (nq - 1 - q)
        z = 0; x = 0; y = 0
        for i in range(dim):
            if i & mask:
                continue
            z += rho[i * dim + i].real - rho[(i | mask) * dim + (i | mask)].real
            w = rho[i * dim + (i | mask)]
            x += 2.0 * w.real
            y -= 2.0 * w.imag
        out[q] = z
        out[nq + q] = x
        out[2 * nq + q] = y


cdef inline void sv_gate(cplx* psi, int dim, int nq, const int* op, double theta) noexcept nogil:
    cdef cplx m[4]
    cdef int cmask = 0
    if op[2] >= 0:
        cmask = 1 << (nq - 1 - op[2])
    fill_block(op[0], theta, m)
    sv_apply(psi, dim, 1 << (nq - 1 - op[1]), cmask, m)


cdef inline void dm_gate(cplx* rho, int dim, int nq, const int* op, double theta,
                         double p1, double p2) noexcept nogil:
    cdef cplx m[4]
    cdef int cmask = 0
    cdef int tmask = 1 << (nq - 1 - op[1])
    if op[2] >= 0:
        cmask = 1 << (nq - 1 - op[2])
    fill_block(op[0], theta, m)
    dm_apply(rho, dim, tmask, cmask, m)
    if op[2] >= 0:
        if p2 > 0:
            dm_depol2(rho, dim, cmask, tmask, p2)
    elif p1 > 0:
        dm_depol1(rho, dim, tmask, p1)


cdef inline double gate_angle(const int* op, const double* angles) noexcept nogil:
    if op[3] >= 0:
        return angles[op[3]]
    return 0.0


cdef void sv_run(cplx* psi, int dim, int nq, const int* ops, int start, int n_ops,
                 const double* angles, int shift_gate, double shift) noexcept nogil:
    cdef int k
    cdef double theta
    for k in range(start, n_ops):
        theta = gate_angle(ops + 4 * k, angles)
        if k == shift_gate:
            theta += shift
        sv_gate(psi, dim, nq, ops + 4 * k, theta)


cdef void dm_run(cplx* rho, int dim, int nq, const int* ops, int start, int n_ops,
                 const double* angles, int shift_gate, double shift,
                 double p1, double p2) noexcept nogil:
    cdef int k
    cdef double theta
    for k in range(start, n_ops):
        theta = gate_angle(ops + 4 * k, angles)
        if k == shift_gate:
            theta += shift
        dm_gate(rho, dim, nq, ops + 4 * k, theta, p1, p2)


cdef inline int rule_terms(int kind, double* shifts, double* coefs) noexcept nogil:
    if kind == 6 or kind == 7:
        shifts[0] = 0.5 * M_PI; coefs[0] = C_PLUS
        shifts[1] = -0.5 * M_PI; coefs[1] = -C_PLUS
        shifts[2] = 1.5 * M_PI; coefs[2] = -C_MINUS
        shifts[3] = -1.5 * M_PI; coefs[3] = C_MINUS
        return 4
    shifts[0] = 0.5 * M_PI; coefs[0] = 0.5
    shifts[1] = -0.5 * M_PI; coefs[1] = -0.5
    return 2


def _prepare(ops, angles):
    ops = np.ascontiguousarray(ops, dtype=np.int32)
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    if angles.ndim != 2:
        raise ValueError("angles must be a 2-D (batch, slots) array")
    if angles.shape[1] == 0:
        angles = np.zeros((angles.shape[0], 1))
    if ops.shape[0] and ops[:, 3].max() >= angles.shape[1]:
        raise ValueError("ops reference an angle slot beyond the angle table")
    return ops, angles


def sv_states(ops, int nq, angles):
    ops, angles = _prepare(ops, angles)
    cdef int dim = 1 << nq
    cdef Py_ssize_t batch = angles.shape[0]
    out = np.zeros((batch, dim), dtype=np.complex128)
    cdef cplx[:, ::1] o = out
    cdef const int[:, ::1] op = ops
    cdef const double[:, ::1] ang = angles
    cdef int n_ops = ops.shape[0]
    cdef Py_ssize_t b
    with nogil:
        for b in range(batch):
            o[b, 0] = 1.0
            if n_ops:
                sv_run(&o[b, 0], dim, nq, &op[0, 0], 0, n_ops, &ang[b, 0], -1, 0.0)
    return out


def sv_features(ops, int nq, angles):
    states = sv_states(ops, nq, angles)
    cdef int dim = 1 << nq
    cdef Py_ssize_t batch = states.shape[0]
    out = np.empty((batch, 3 * nq))
    cdef double[:, ::1] o = out
    cdef cplx[:, ::1] st = states
    cdef Py_ssize_t b
    with nogil:
        for b in range(batch):
            sv_measure(&st[b, 0], dim, nq, &o[b, 0])
    return out


def dm_features(ops, int nq, angles, double p1, double p2):
    ops, angles = _prepare(ops, angles)
    cdef int dim = 1 << nq
    cdef Py_ssize_t batch = angles.shape[0]
    out = np.empty((batch, 3 * nq))
    rho_arr = np.empty(dim * dim, dtype=np.complex128)
    cdef cplx[::1] rho = rho_arr
    cdef double[:, ::1] o = out
    cdef const int[:, ::1] op = ops
    cdef const double[:, ::1] ang = angles
    cdef int n_ops = ops.shape[0]
    cdef Py_ssize_t b, i
    with nogil:
        for b in range(batch):
            for i in range(dim * dim):
                rho[i] = 0
            rho[0] = 1.0
            if n_ops:
                dm_run(&rho[0], dim, nq, &op[0, 0], 0, n_ops, &ang[b, 0], -1, 0.0, p1, p2)
            dm_measure(&rho[0], dim, nq, &o[b, 0])
    return out


def sv_jacobian(ops, int nq, angles):
    """Features and shift-rule Jacobian ``d features / d angles``, shape (B, 3nq, A)."""
    ops, angles = _prepare(ops, angles)
    cdef int dim = 1 << nq
    cdef int nf = 3 * nq
    cdef Py_ssize_t batch = angles.shape[0]
    cdef int n_angles = angles.shape[1]
    cdef int n_ops = ops.shape[0]
    feats = np.empty((batch, nf))
    jac = np.zeros((batch, nf, n_angles))
    prefix_arr = np.zeros((max(n_ops, 1), dim), dtype=np.complex128)
    work_arr = np.zeros(dim, dtype=np.complex128)
    tmp_arr = np.zeros(nf)
    cdef double[:, ::1] f = feats
    cdef double[:, :, ::1] jv = jac
    cdef cplx[:, ::1] prefix = prefix_arr
    cdef cplx[::1] work = work_arr
    cdef double[::1] tmp = tmp_arr
    cdef const int[:, ::1] op = ops
    cdef const double[:, ::1] ang = angles
    cdef double shifts[4]
    cdef double coefs[4]
    cdef Py_ssize_t b, i
    cdef int k, t, n_terms, slot, fi
    with nogil:
        for b in range(batch):
            for i in range(dim):
                work[i] = 0
            work[0] = 1.0
            for k in range(n_ops):
                memcpy(&prefix[k, 0], &work[0], dim * sizeof(cplx))
                sv_gate(&work[0], dim, nq, &op[k, 0], gate_angle(&op[k, 0], &ang[b, 0]))
            sv_measure(&work[0], dim, nq, &f[b, 0])
            for k in range(n_ops):
                slot = op[k, 3]
                if slot < 0:
                    continue
                n_terms = rule_terms(op[k, 0], shifts, coefs)
                for t in range(n_terms):
                    memcpy(&work[0], &prefix[k, 0], dim * sizeof(cplx))
                    sv_run(&work[0], dim, nq, &op[0, 0], k, n_ops, &ang[b, 0], k, shifts[t])
                    sv_measure(&work[0], dim, nq, &tmp[0])
                    for fi in range(nf):
                        jv[b, fi, slot] += coefs[t] * tmp[fi]
    return feats, jac


def dm_jacobian(ops, int nq, angles, double p1, double p2):
    """Noisy features and shift-rule Jacobian under gate-level depolarizing noise."""
    ops, angles = _prepare(ops, angles)
    cdef int dim = 1 << nq
    cdef int d2 = dim * dim
    cdef int nf = 3 * nq
    cdef Py_ssize_t batch = angles.shape[0]
    cdef int n_angles = angles.shape[1]
    cdef int n_ops = ops.shape[0]
    feats = np.empty((batch, nf))
    jac = np.zeros((batch, nf, n_angles))
    prefix_arr = np.zeros((max(n_ops, 1), d2), dtype=np.complex128)
    work_arr = np.zeros(d2, dtype=np.complex128)
    tmp_arr = np.zeros(nf)
    cdef double[:, ::1] f = feats
    cdef double[:, :, ::1] jv = jac
    cdef cplx[:, ::1] prefix = prefix_arr
    cdef cplx[::1] work = work_arr
    cdef double[::1] tmp = tmp_arr
    cdef const int[:, ::1] op = ops
    cdef const double[:, ::1] ang = angles
    cdef double shifts[4]
    cdef double coefs[4]
    cdef Py_ssize_t b, i
    cdef int k, t, n_terms, slot, fi
    with nogil:
        for b in range(batch):
            for i in range(d2):
                work[i] = 0
            work[0] = 1.0
            for k in range(n_ops):
                memcpy(&prefix[k, 0], &work[0], d2 * sizeof(cplx))
                dm_gate(&work[0], dim, nq, &op[k, 0], gate_angle(&op[k, 0], &ang[b, 0]), p1, p2)
            dm_measure(&work[0], dim, nq, &f[b, 0])
            for k in range(n_ops):
                slot = op[k, 3]
                if slot < 0:
                    continue
                n_terms = rule_terms(op[k, 0], shifts, coefs)
                for t in range(n_terms):
                    memcpy(&work[0], &prefix[k, 0], d2 * sizeof(cplx))
                    dm_run(&work[0], dim, nq, &op[0, 0], k, n_ops, &ang[b, 0], k, shifts[t], p1, p2)
                    dm_measure(&work[0], dim, nq, &tmp[0])
                    for fi in range(nf):
                        jv[b, fi, slot] += coefs[t] * tmp[fi]
    return feats, jac
