import numpy as np
import pytest


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_pd(rng, n, floor=0.1):
    A = crandn(rng, n, n)
    return A @ A.conj().T + floor * np.eye(n)


def random_psd(rng, n, rank=None):
    A = crandn(rng, n, n if rank is None else rank)
    return A @ A.conj().T


def random_filter(rng, n, r, power=1.0):
    X = crandn(rng, n, r)
    return X * np.sqrt(power / np.sum(np.abs(X) ** 2))


def loop_covariances(H, V, U, noise, bnoise):
    """Covariances by explicit loops over all users, used as an oracle."""
    L, _, K, N, M = H.shape
    R = np.zeros((L, K, N, N), complex)
    Q = np.zeros((L, K, N, N), complex)
    Rb = np.zeros((L, K, M, M), complex)
    Qb = np.zeros((L, K, M, M), complex)
    for l in range(L):
        for j in range(K):
            total = noise * np.eye(N, dtype=complex)
            for i in range(L):
                for k in range(K):
                    g = H[l, i, k] @ V[i, k]
                    total += g @ g.conj().T
            g = H[l, l, j] @ V[l, j]
            R[l, j] = g @ g.conj().T
            Q[l, j] = total - R[l, j]
    for i in range(L):
        for k in range(K):
            total = bnoise * np.eye(M, dtype=complex)
            for l in range(L):
                for j in range(K):
                    g = H[l, i, k].conj().T @ U[l, j]
                    total += g @ g.conj().T
            g = H[i, i, k].conj().T @ U[i, k]
            Rb[i, k] = g @ g.conj().T
            Qb[i, k] = total - Rb[i, k]
    return R, Q, Rb, Qb


def loop_rate(R, Q, U):
    """``log2 det(I + (U^H Q U)^{-1} U^H R U)`` via eigenvalues, used as an oracle."""
    A = U.conj().T @ Q @ U
    B = U.conj().T @ R @ U
    w = np.linalg.eigvals(np.linalg.solve(A, B))
    return float(np.sum(np.log2(1.0 + w.real)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
