"""Exact dense linear algebra over F_p on numpy int64 arrays."""

from __future__ import annotations

import numpy as np

from .polyring import FieldSpec, Poly


def asmat(a, p: int) -> np.ndarray:
    return np.asarray(a, dtype=np.int64) % p


def matmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return (a @ b) % p


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def rref(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = np.array(a, dtype=np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            m[[r, k]] = m[[k, r]]
        inv = pow(int(m[r, c]), -1, p)
        m[r] = (m[r] * inv) % p
        col = m[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            m[nzr] = (m[nzr] - np.outer(col[nzr], m[r])) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray, p: int) -> int:
    if a.size == 0:
        return 0
    return len(rref(a, p)[1])


def nullspace(a: np.ndarray, p: int) -> np.ndarray:
    """Columns form a basis of {x : a x = 0}; shape (ncols, k)."""
    a = np.asarray(a, dtype=np.int64)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return identity(cols)
    m, piv = rref(a, p)
    free = [c for c in range(cols) if c not in piv]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for j, f in enumerate(free):
        basis[f, j] = 1
        for i, pc in enumerate(piv):
            basis[pc, j] = (-m[i, f]) % p
    return basis


def left_nullspace(a: np.ndarray, p: int) -> np.ndarray:
    """Rows form a basis of {y : y a = 0}; shape (k, nrows)."""
    return nullspace(np.asarray(a).T, p).T


def colspace(a: np.ndarray, p: int) -> np.ndarray:
    """Columns form a basis of the column space of a."""
    a = np.asarray(a, dtype=np.int64)
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=np.int64)
    _, piv = rref(a, p)
    return a[:, piv] % p


def solve(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray | None:
    """One solution x of a x = b (b a vector or matrix of columns), or None."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    rows, cols = a.shape
    aug = np.concatenate([a, b], axis=1)
    m, piv = rref(aug, p)
    if any(c >= cols for c in piv):
        return None
    x = np.zeros((cols, b.shape[1]), dtype=np.int64)
    for i, c in enumerate(piv):
        x[c] = m[i, cols:]
    return x[:, 0] if vec else x


def inverse(a: np.ndarray, p: int) -> np.ndarray:
    n = a.shape[0]
    x = solve(a, identity(n), p)
    if x is None or rank(a, p) != n:
        raise ValueError("matrix is singular")
    return x


def generalized_inverse(a: np.ndarray, p: int) -> np.ndarray:
    """G with a G a = a, built from a basis of the column space."""
    a = np.asarray(a, dtype=np.int64) % p
    rows, cols = a.shape
    g = np.zeros((cols, rows), dtype=np.int64)
    if rows == 0 or cols == 0:
        return g
    # complete a basis of Im(a) to F_p^rows and map the complement to zero
    m, piv = rref(a, p)
    img = a[:, piv]
    pre = np.zeros((cols, len(piv)), dtype=np.int64)
    for j, c in enumerate(piv):
        pre[c, j] = 1
    comp = []
    cur = img
    for i in range(rows):
        e = np.zeros((rows, 1), dtype=np.int64)
        e[i, 0] = 1
        trial = np.concatenate([cur, e], axis=1)
        if rank(trial, p) > cur.shape[1]:
            cur = trial
            comp.append(i)
    basis_inv = inverse(cur, p)
    # g maps image basis vector j -> pre[:, j], complement -> 0
    target = np.concatenate([pre, np.zeros((cols, len(comp)), dtype=np.int64)], axis=1)
    return matmul(target, basis_inv, p)


def matpow(a: np.ndarray, n: int, p: int) -> np.ndarray:
    result = identity(a.shape[0])
    base = a % p
    while n:
        if n & 1:
            result = matmul(result, base, p)
        base = matmul(base, base, p)
        n >>= 1
    return result


def poly_at(f: Poly, a: np.ndarray) -> np.ndarray:
    """f[theta] for the matrix theta = a."""
    p = f.field.p
    n = a.shape[0]
    out = np.zeros((n, n), dtype=np.int64)
    for c in reversed(f.coeffs):
        out = matmul(out, a, p)
        out[np.diag_indices(n)] += int(c)
        out %= p
    return out


def companion(f: Poly) -> np.ndarray:
    """Companion matrix of a monic f acting on K[X]/(f) in the basis 1, X, ..., X^(d-1)."""
    if not f.is_monic():
        raise ValueError("companion matrix needs a monic polynomial")
    d = f.deg
    p = f.field.p
    m = np.zeros((d, d), dtype=np.int64)
    for i in range(1, d):
        m[i, i - 1] = 1
    for i in range(d):
        m[i, d - 1] = (-int(f.coeffs[i])) % p
    return m


def block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=np.int64)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i : i + k, i : i + k] = b
        i += k
    return out


def minimal_polynomial(a: np.ndarray, field: FieldSpec) -> Poly:
    """Minimal polynomial via the first linear dependency among I, A, A^2, ..."""
    p = field.p
    n = a.shape[0]
    if n == 0:
        return Poly.one(field)
    powers = [identity(n).reshape(-1)]
    cur = identity(n)
    for k in range(1, n + 1):
        cur = matmul(cur, a, p)
        mat = np.stack(powers, axis=1)
        sol = solve(mat, cur.reshape(-1), p)
        if sol is not None:
            return Poly([(-int(c)) % p for c in sol] + [1], field)
        powers.append(cur.reshape(-1))
    raise AssertionError("Cayley-Hamilton violated")


def vectors(dim: int, p: int) -> np.ndarray:
    """All vectors of F_p^dim as rows, in lexicographic index order."""
    if dim == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(p**dim, dtype=np.int64)
    out = np.zeros((p**dim, dim), dtype=np.int64)
    for i in range(dim):
        out[:, i] = (idx // p**i) % p
    return out


def span_vectors(basis: np.ndarray, p: int) -> np.ndarray:
    """All vectors in the column span of basis, as rows."""
    k = basis.shape[1]
    coeffs = vectors(k, p)
    return (coeffs @ basis.T) % p


def encode(vs: np.ndarray, p: int) -> np.ndarray:
    """Integer code of each row vector (base p, lowest coordinate first)."""
    dim = vs.shape[-1]
    w = p ** np.arange(dim, dtype=np.int64)
    return (vs * w).sum(axis=-1)


def decode(codes: np.ndarray, dim: int, p: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    out = np.zeros(codes.shape + (dim,), dtype=np.int64)
    for i in range(dim):
        out[..., i] = (codes // p**i) % p
    return out
