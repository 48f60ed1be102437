"""Pure-numpy kernels, vectorised over the batch axis.

Used when the compiled extension is unavailable or ``HQNN_KERNEL=python``.
Every function mirrors the signature of its counterpart in ``_fast.pyx``.
"""
import numpy as np

from .rules import FOUR_TERM, TWO_TERM

_CHUNK = 4096
_SQ = 1.0 / np.sqrt(2.0)
_FIXED = {
    3: np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    4: np.array([[0, 1], [1, 0]], dtype=complex),
    5: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _blocks(kind, theta):
    """Per-sample 2x2 blocks, shape (B, 2, 2), or a shared (2, 2) block."""
    if kind in _FIXED:
        return _FIXED[kind]
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    if kind in (0, 6):  # RX, CRX
        out[:, 0, 0] = c
        out[:, 0, 1] = -1j * s
        out[:, 1, 0] = -1j * s
        out[:, 1, 1] = c
    elif kind == 1:  # RY
        out[:, 0, 0] = c
        out[:, 0, 1] = -s
        out[:, 1, 0] = s
        out[:, 1, 1] = c
    else:  # RZ, CRZ
        out[:, 0, 0] = np.exp(-0.5j * theta)
        out[:, 1, 1] = np.exp(0.5j * theta)
    return out


def _apply(t, blocks, target_ax, control_ax):
    # t: (B, ...) with length-2 qubit axes; returns updated copy
    if control_ax >= 0:
        t = t.copy()
        idx = [slice(None)] * t.ndim
        idx[control_ax] = 1
        idx = tuple(idx)
        sub_ax = target_ax - 1 if target_ax > control_ax else target_ax
        t[idx] = _apply(t[idx], blocks, sub_ax, -1)
        return t
    moved = np.moveaxis(t, target_ax, 1)
    if blocks.ndim == 2:
        new = np.einsum("ij,bj...->bi...", blocks, moved)
    else:
        new = np.einsum("bij,bj...->bi...", blocks, moved)
    return np.moveaxis(new, 1, target_ax)


def _sv_measure(psi, nq):
    b = psi.shape[0]
    out = np.empty((b, 3 * nq))
    for q in range(nq):
        m = np.moveaxis(psi, 1 + q, 1).reshape(b, 2, -1)
        a0, a1 = m[:, 0], m[:, 1]
        out[:, q] = (np.abs(a0) ** 2 - np.abs(a1) ** 2).sum(axis=1)
        z = (a0.conj() * a1).sum(axis=1)
        out[:, nq + q] = 2.0 * z.real
        out[:, 2 * nq + q] = 2.0 * z.imag
    return out


def _dm_measure(rho, nq):
    b = rho.shape[0]
    out = np.empty((b, 3 * nq))
    for q in range(nq):
        m = np.moveaxis(rho, (1 + q, 1 + nq + q), (1, 2))
        m = m.reshape(b, 2, 2, -1)
        # remaining axes are (rows..., cols...) with qubit q removed; take the diagonal
        dim = 2 ** (nq - 1)
        m = m.reshape(b, 2, 2, dim, dim)
        diag = np.einsum("bijkk->bij", m)
        out[:, q] = (diag[:, 0, 0] - diag[:, 1, 1]).real
        out[:, nq + q] = 2.0 * diag[:, 0, 1].real
        out[:, 2 * nq + q] = -2.0 * diag[:, 0, 1].imag
    return out


def _depolarize(rho, qubits, p, nq):
    if p == 0.0:
        return rho
    k = len(qubits)
    d = 2 ** k
    lam = 1.0 - p * d * d / (d * d - 1.0)
    row_axes = [1 + q for q in qubits]
    col_axes = [1 + nq + q for q in qubits]
    m = np.moveaxis(rho, row_axes + col_axes, list(range(1, 1 + 2 * k)))
    shape = m.shape
    m = m.reshape((shape[0], d, d) + shape[1 + 2 * k:])
    tr = np.einsum("bii...->b...", m)
    out = lam * m
    for i in range(d):
        out[:, i, i] += (1.0 - lam) * tr / d
    out = out.reshape(shape)
    return np.moveaxis(out, list(range(1, 1 + 2 * k)), row_axes + col_axes)


def _angle(angles, slot, gate_index, shift_gate, shift):
    theta = angles[:, slot]
    if shift_gate is not None:
        theta = theta + np.where(shift_gate == gate_index, shift, 0.0)
    return theta


def _sv_run(ops, nq, angles, shift_gate=None, shift=None):
    b = angles.shape[0]
    psi = np.zeros((b,) + (2,) * nq, dtype=complex)
    psi[(slice(None),) + (0,) * nq] = 1.0
    for k, (kind, target, control, slot) in enumerate(ops):
        theta = _angle(angles, slot, k, shift_gate, shift) if slot >= 0 else None
        blocks = _blocks(int(kind), theta)
        psi = _apply(psi, blocks, 1 + target, 1 + control if control >= 0 else -1)
    return psi


def _dm_run(ops, nq, angles, p1, p2, shift_gate=None, shift=None):
    b = angles.shape[0]
    rho = np.zeros((b,) + (2,) * (2 * nq), dtype=complex)
    rho[(slice(None),) + (0,) * (2 * nq)] = 1.0
    for k, (kind, target, control, slot) in enumerate(ops):
        theta = _angle(angles, slot, k, shift_gate, shift) if slot >= 0 else None
        blocks = _blocks(int(kind), theta)
        c_row = 1 + control if control >= 0 else -1
        c_col = 1 + nq + control if control >= 0 else -1
        rho = _apply(rho, blocks, 1 + target, c_row)
        rho = _apply(rho, np.conj(blocks), 1 + nq + target, c_col)
        if control >= 0:
            rho = _depolarize(rho, (int(control), int(target)), p2, nq)
        else:
            rho = _depolarize(rho, (int(target),), p1, nq)
    return rho


def _chunked(fn, angles, width):
    out = np.empty((angles.shape[0], width))
    for start in range(0, angles.shape[0], _CHUNK):
        out[start:start + _CHUNK] = fn(angles[start:start + _CHUNK])
    return out


def sv_states(ops, nq, angles):
    angles = np.ascontiguousarray(angles, dtype=float)
    return _sv_run(ops, nq, angles).reshape(angles.shape[0], -1)


def sv_features(ops, nq, angles):
    angles = np.ascontiguousarray(angles, dtype=float)
    return _chunked(lambda a: _sv_measure(_sv_run(ops, nq, a), nq), angles, 3 * nq)


def dm_features(ops, nq, angles, p1, p2):
    angles = np.ascontiguousarray(angles, dtype=float)
    return _chunked(lambda a: _dm_measure(_dm_run(ops, nq, a, p1, p2), nq), angles, 3 * nq)


def _jacobian(ops, nq, angles, measure_shifted):
    b, n_angles = angles.shape
    terms = []  # (gate index, slot, shift, coef)
    for k, (kind, _, _, slot) in enumerate(ops):
        if slot < 0:
            continue
        rule = FOUR_TERM if kind in (6, 7) else TWO_TERM
        terms.extend((k, slot, s, c) for s, c in rule)
    jac = np.zeros((b, 3 * nq, n_angles))
    if not terms:
        return jac
    n_terms = len(terms)
    gate_idx = np.array([t[0] for t in terms])
    shifts = np.array([t[2] for t in terms])
    # one row per (sample, term), evaluated in chunks
    rows = np.repeat(angles, n_terms, axis=0)
    row_gate = np.tile(gate_idx, b)
    row_shift = np.tile(shifts, b)
    vals = np.empty((rows.shape[0], 3 * nq))
    for start in range(0, rows.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        vals[sl] = measure_shifted(rows[sl], row_gate[sl], row_shift[sl])
    vals = vals.reshape(b, n_terms, 3 * nq)
    for j, (_, slot, _, coef) in enumerate(terms):
        jac[:, :, slot] += coef * vals[:, j]
    return jac


def sv_jacobian(ops, nq, angles):
    angles = np.ascontiguousarray(angles, dtype=float)
    feats = sv_features(ops, nq, angles)
    jac = _jacobian(
        ops, nq, angles,
        lambda a, g, s: _sv_measure(_sv_run(ops, nq, a, g, s), nq),
    )
    return feats, jac


def dm_jacobian(ops, nq, angles, p1, p2):
    angles = np.ascontiguousarray(angles, dtype=float)
    feats = dm_features(ops, nq, angles, p1, p2)
    jac = _jacobian(
        ops, nq, angles,
        lambda a, g, s: _dm_measure(_dm_run(ops, nq, a, p1, p2, g, s), nq),
    )
    return feats, jac
