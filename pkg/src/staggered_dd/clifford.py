"""Two-qubit Clifford group as stabilizer tableaux.

A Clifford is stored by the images of the generators ``X0, X1, Z0, Z1`` under
conjugation. Each image is a Pauli ``i^k X^x Z^z`` held as ``(x0, x1, z0, z1, k)``
with ``k`` mod 4. The whole group (11,520 elements including signs) is
enumerated once by a cost-ordered search over {H, S, CX}, which gives every
element a short gate word, an index for uniform sampling and an exact inverse.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from .gates import CX_MAT, H_MAT, I2, X, Y, Z, rz

GROUP_ORDER = 11520
N = 2

# (gate name, local qubits); S is realised as RZ(pi/2)
GENERATORS = (("h", (0,)), ("h", (1,)), ("s", (0,)), ("s", (1,)), ("cx", (0, 1)))
_COST = {"h": 1.0, "s": 0.01, "cx": 5.0}


def pauli_mul(a: tuple, b: tuple) -> tuple:
    """Product of Paulis in ``(x0, x1, z0, z1, k)`` form."""
    ax, az, ak = a[:N], a[N:2 * N], a[2 * N]
    bx, bz, bk = b[:N], b[N:2 * N], b[2 * N]
    # moving Z^az past X^bx picks up (-1) per overlapping qubit
    sign = sum(az[j] & bx[j] for j in range(N))
    x = tuple(ax[j] ^ bx[j] for j in range(N))
    z = tuple(az[j] ^ bz[j] for j in range(N))
    return x + z + ((ak + bk + 2 * sign) % 4,)


def _generator(kind: str, q: int) -> tuple:
    x = [0] * N
    z = [0] * N
    (x if kind == "x" else z)[q] = 1
    return tuple(x) + tuple(z) + (0,)


IDENTITY_PAULI = (0,) * (2 * N) + (0,)
BASIS = tuple(_generator("x", q) for q in range(N)) + tuple(_generator("z", q) for q in range(N))


@dataclass(frozen=True)
class Clifford:
    images: tuple[tuple, ...]  # images of X0, X1, Z0, Z1

    def apply(self, p: tuple) -> tuple:
        """Conjugate the Pauli ``p`` by this Clifford."""
        out = (0,) * (2 * N) + (p[2 * N],)
        for j in range(2 * N):
            if p[j]:
                out = pauli_mul(out, self.images[j])
        return out

    def then(self, other: Clifford) -> Clifford:
        """Apply ``self`` first, then ``other``."""
        return Clifford(tuple(other.apply(img) for img in self.images))

    def inverse(self) -> Clifford:
        m = np.array([img[: 2 * N] for img in self.images], dtype=np.uint8)
        minv = _gf2_inverse(m)
        cand = [tuple(int(v) for v in row) + (_hermitian_k(row),) for row in minv]
        fixed = []
        for g, img in zip(BASIS, cand):
            back = self.apply(img)
            if back == g:
                fixed.append(img)
            elif back[: 2 * N] == g[: 2 * N] and (back[2 * N] - g[2 * N]) % 4 == 2:
                fixed.append(img[: 2 * N] + ((img[2 * N] + 2) % 4,))
            else:  # pragma: no cover - guarded by the symplectic inverse
                raise ArithmeticError("tableau inversion failed")
        return Clifford(tuple(fixed))

    def is_identity(self) -> bool:
        return self.images == BASIS

    def key(self) -> tuple:
        return self.images


def _hermitian_k(bits) -> int:
    # X^x Z^z is Hermitian up to i^(x.z); Y = i X Z
    return int(sum(int(bits[j]) & int(bits[N + j]) for j in range(N))) % 4


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    """Row-vector convention: images are rows, a Pauli v maps to v @ m."""
    n = len(m)
    aug = np.concatenate([m % 2, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r, col])
        aug[[col, pivot]] = aug[[pivot, col]]
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] ^= aug[col]
    return aug[:, n:]


IDENTITY = Clifford(BASIS)


def gate_clifford(name: str, qubits: Sequence[int]) -> Clifford:
    """Tableau of one generator gate on local qubits."""
    imgs = list(BASIS)
    if name == "h":
        (q,) = qubits
        imgs[q], imgs[N + q] = BASIS[N + q], BASIS[q]
    elif name == "s":
        (q,) = qubits
        y = list(BASIS[q])
        y[N + q] = 1
        y[2 * N] = 1
        imgs[q] = tuple(y)
    elif name == "cx":
        c, t = qubits
        imgs[c] = pauli_mul(BASIS[c], BASIS[t])
        imgs[N + t] = pauli_mul(BASIS[N + c], BASIS[N + t])
    else:
        raise ValueError(f"{name} is not a generator")
    return Clifford(tuple(imgs))


@dataclass(frozen=True)
class CliffordTable:
    elements: tuple[Clifford, ...]
    words: tuple[tuple[tuple[str, tuple[int, ...]], ...], ...]
    index: dict

    def __len__(self):
        return len(self.elements)

    def inverse_index(self, i: int) -> int:
        return self.index[self.elements[i].inverse().key()]

    def lookup(self, c: Clifford) -> int:
        return self.index[c.key()]


@lru_cache(maxsize=None)
def clifford_table() -> CliffordTable:
    """All 11,520 two-qubit Cliffords, each with a cheapest generator word."""
    gens = [(g, gate_clifford(*g)) for g in GENERATORS]
    best = {IDENTITY.key(): 0.0}
    words = {IDENTITY.key(): ()}
    elems = {IDENTITY.key(): IDENTITY}
    heap = [(0.0, 0, IDENTITY.key())]
    counter = 1
    done = set()
    order = []
    while heap:
        cost, _, key = heapq.heappop(heap)
        if key in done:
            continue
        done.add(key)
        order.append(key)
        cur = elems[key]
        for g, gc in gens:
            nxt = cur.then(gc)
            nk = nxt.key()
            c2 = cost + _COST[g[0]]
            if nk not in best or c2 < best[nk] - 1e-12:
                best[nk] = c2
                words[nk] = words[key] + (g,)
                elems[nk] = nxt
                heapq.heappush(heap, (c2, counter, nk))
                counter += 1
    if len(order) != GROUP_ORDER:  # pragma: no cover
        raise ArithmeticError(f"enumerated {len(order)} Cliffords, expected {GROUP_ORDER}")
    return CliffordTable(
        tuple(elems[k] for k in order), tuple(words[k] for k in order), {k: i for i, k in enumerate(order)}
    )


def word_clifford(word) -> Clifford:
    return reduce(lambda acc, g: acc.then(gate_clifford(*g)), word, IDENTITY)


_S = rz(math.pi / 2)


def word_unitary(word) -> np.ndarray:
    """4x4 matrix of a generator word; local qubit 0 is the most significant."""
    u = np.eye(4, dtype=complex)
    for name, qs in word:
        if name == "cx":
            g = CX_MAT if qs == (0, 1) else _swap() @ CX_MAT @ _swap()
        else:
            m = H_MAT if name == "h" else _S
            g = np.kron(m, I2) if qs == (0,) else np.kron(I2, m)
        u = g @ u
    return u


def _swap():
    return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


_PAULI_1Q = {(0, 0): I2, (1, 0): X, (0, 1): Z, (1, 1): Y}


def pauli_matrix(p: tuple) -> np.ndarray:
    """Matrix of ``i^k X^x Z^z`` (qubit 0 most significant)."""
    xz = np.kron(
        np.linalg.matrix_power(X, p[0]) @ np.linalg.matrix_power(Z, p[2]),
        np.linalg.matrix_power(X, p[1]) @ np.linalg.matrix_power(Z, p[3]),
    )
    return (1j ** p[4]) * xz


def sample_indices(rng: np.random.Generator, n: int) -> list[int]:
    """``n`` uniform draws from the group, as table indices."""
    return [int(i) for i in rng.integers(GROUP_ORDER, size=n)]
