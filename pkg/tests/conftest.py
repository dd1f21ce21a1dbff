"""Shared independent oracles: raw-numpy constructions kept deliberately
separate from the library code paths they check."""

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HAD = (SX + SZ) / np.sqrt(2)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def kron_chain(*mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_matrix(labels):
    return kron_chain(*[PAULIS[c] for c in labels])


def c4_vector():
    """Ideal cluster amplitudes written out by hand (qubit 1 = MSB)."""
    v = np.zeros(16, dtype=complex)
    v[0b0000] = 0.5
    v[0b1010] = 0.5
    v[0b0101] = 0.5
    v[0b1111] = -0.5
    return v


def brute_partial_trace(rho, keep, n):
    """Index-loop partial trace oracle; keep is a 1-based qubit list."""
    keep0 = [q - 1 for q in keep]
    drop0 = [i for i in range(n) if i not in keep0]
    dk = 2 ** len(keep0)
    out = np.zeros((dk, dk), dtype=complex)

    def bits_of(idx):
        return [(idx >> (n - 1 - i)) & 1 for i in range(n)]

    def idx_of(bits):
        return int("".join(str(b) for b in bits), 2)

    for a in range(2**n):
        ba = bits_of(a)
        for b in range(2**n):
            bb = bits_of(b)
            if any(ba[i] != bb[i] for i in drop0):
                continue
            ra = int("".join(str(ba[i]) for i in keep0), 2)
            rb = int("".join(str(bb[i]) for i in keep0), 2)
            out[ra, rb] += rho[a, b]
    return out


def random_state_vector(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def random_unitary(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def aligned_distance(a, b):
    """Phase-align b onto a at a's largest amplitude, then max-abs distance."""
    k = int(np.argmax(np.abs(a)))
    phase = (a[k] / abs(a[k])) * (b[k] / abs(b[k])).conjugate()
    return float(np.abs(a - phase * b).max())
