"""Solovay-Kitaev approximation of single-qubit unitaries over a finite basis.

Unitaries are handled as unit quaternions: U = q0 I - i (q1 X + q2 Y + q3 Z)
after dividing out sqrt(det U).  For two such matrices the phase-minimized
operator-norm distance is min(|q - p|, |q + p|), which makes nearest-neighbour
search over the net a plain KD-tree query on the points +q and -q.

The base case is a meet-in-the-middle search over pairs of net words.  Each
level of recursion applies the balanced group-commutator step.  Every
returned word is checked by multiplying its gates out.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..circuit import GateBasis, builtin_basis
from ..errors import BudgetError, CacheError

PROBE_COUNT = 10_000
PROBE_SEED = 0
RATE_PROBES = 48
RATE_SEED = 1
MAX_EPSILON0 = 0.5
EXACT_TOL = 1e-10
MAX_DEPTH = 8
_MAGIC = b"SKC1"


# -- quaternion helpers ------------------------------------------------------

def quaternion(u: np.ndarray) -> np.ndarray:
    """Unit quaternion of the SU(2) representative of ``u`` (sign arbitrary)."""
    u = np.asarray(u, dtype=complex)
    u = u / np.sqrt(np.linalg.det(u))
    return np.array([
        (u[0, 0] + u[1, 1]).real / 2,
        -(u[0, 1] + u[1, 0]).imag / 2,
        (u[1, 0] - u[0, 1]).real / 2,
        (u[1, 1] - u[0, 0]).imag / 2,
    ])


def quaternion_matrix(q) -> np.ndarray:
    q0, q1, q2, q3 = q
    return np.array([[q0 - 1j * q3, -1j * q1 - q2], [-1j * q1 + q2, q0 + 1j * q3]])


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion of U_a @ U_b (broadcasts over leading axes)."""
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ], axis=-1)


def _canonical(q: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(q) > 1e-9))
    return q if q[i] > 0 else -q


def distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over phase of the operator-norm distance between two 2x2 unitaries."""
    a, b = quaternion(u), quaternion(v)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def _rotation(axis, theta: float) -> np.ndarray:
    return quaternion_matrix(np.concatenate([[np.cos(theta / 2)], np.sin(theta / 2) * np.asarray(axis)]))


def _axis_angle(u: np.ndarray):
    q = quaternion(u)
    if q[0] < 0:
        q = -q
    theta = 2 * np.arccos(np.clip(q[0], -1.0, 1.0))
    s = np.linalg.norm(q[1:])
    return theta, (q[1:] / s if s > 1e-15 else np.array([0.0, 0.0, 1.0]))


def _rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.cross(a, b)
    s, d = np.linalg.norm(c), float(np.dot(a, b))
    if s < 1e-15:
        if d > 0:
            return np.eye(2, dtype=complex)
        p = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(p) < 1e-8:
            p = np.cross(a, [0.0, 1.0, 0.0])
        return _rotation(p / np.linalg.norm(p), np.pi)
    return _rotation(c / s, np.arctan2(s, d))


def group_commutator(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Balanced V, W with V W V^dag W^dag equal to ``d`` up to phase."""
    theta, axis = _axis_angle(d)
    st = np.sin(theta / 2)
    x = np.sqrt(max(0.0, (1 - np.sqrt(max(0.0, 1 - st * st))) / 2))
    phi = 2 * np.arcsin(min(1.0, np.sqrt(x)))
    v = _rotation([1.0, 0.0, 0.0], phi)
    w = _rotation([0.0, 1.0, 0.0], phi)
    _, m = _axis_angle(v @ w @ v.conj().T @ w.conj().T)
    s = _rotation_between(m, axis)
    return s @ v @ s.conj().T, s @ w @ s.conj().T


# -- the net -----------------------------------------------------------------

@dataclass(eq=False)
class SKCache:
    """Deduplicated single-qubit words up to length ``max_word_length``.

    Entries are kept in BFS order, so each stored word is a shortest word for
    its matrix class.  ``words`` list mnemonics in circuit order; ``matrices``
    hold the exact products (last gate leftmost).  Read-only once built.
    """

    basis_id: str
    max_word_length: int
    words: list[tuple[str, ...]]
    matrices: np.ndarray
    epsilon0: float = float("nan")
    base_error: float = float("nan")
    c_approx: float = float("nan")
    _quats: np.ndarray = field(init=False, repr=False)
    _tree: cKDTree = field(init=False, repr=False)
    _bloch_tree: cKDTree = field(init=False, repr=False)
    _gate_q: dict = field(init=False, repr=False)
    _inverse: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=complex).reshape(-1, 2, 2)
        basis = builtin_basis(self.basis_id)
        self._quats = np.array([_canonical(quaternion(m)) for m in self.matrices])
        self._tree = cKDTree(np.vstack([self._quats, -self._quats]))
        col = self.matrices[:, :, 0]
        bloch = np.stack([
            2 * (col[:, 0].conj() * col[:, 1]).real,
            2 * (col[:, 0].conj() * col[:, 1]).imag,
            np.abs(col[:, 0]) ** 2 - np.abs(col[:, 1]) ** 2,
        ], axis=1)
        self._bloch_tree = cKDTree(bloch)
        self._gate_q = {g.mnemonic: quaternion(g.matrix) for g in basis.single_qubit_defs()}
        self._inverse = {}
        for g in basis.single_qubit_defs():
            hit = self.lookup(g.matrix.conj().T)
            if hit is None:
                raise CacheError(f"no inverse of {g.mnemonic} within word length {self.max_word_length}")
            self._inverse[g.mnemonic] = self.words[hit]

    def __len__(self):
        return len(self.words)

    def __reduce__(self):
        # indices are rebuilt on unpickling; measured constants travel as-is
        return (_restore, (self.basis_id, self.max_word_length, self.words, self.matrices,
                           self.epsilon0, self.base_error, self.c_approx))

    def _index(self, j) -> np.ndarray:
        return np.asarray(j) % len(self.words)

    def nearest(self, u: np.ndarray) -> tuple[int, float]:
        d, j = self._tree.query(quaternion(u))
        return int(self._index(j)), float(d)

    def lookup(self, u: np.ndarray, tol: float = EXACT_TOL) -> Optional[int]:
        """Index of the entry equal to ``u`` up to phase, if any."""
        j, d = self.nearest(u)
        return j if d <= tol else None

    def lookup_column(self, u: np.ndarray, tol: float = EXACT_TOL) -> Optional[int]:
        """Shortest entry W with W|0> equal to u|0> up to phase, if any."""
        c = np.asarray(u)[:, 0]
        b = np.array([2 * (c[0].conj() * c[1]).real, 2 * (c[0].conj() * c[1]).imag,
                      abs(c[0]) ** 2 - abs(c[1]) ** 2])
        hits = self._bloch_tree.query_ball_point(b, 2 * tol)
        if not hits:
            return None
        return min(hits, key=lambda i: (len(self.words[i]), i))

    def inverse_word(self, word: Sequence[str]) -> tuple[str, ...]:
        return tuple(m for g in reversed(word) for m in self._inverse[g])

    def reduce(self, word: Sequence[str]) -> tuple[str, ...]:
        """Cancel adjacent gate/inverse pairs; the matrix is unchanged."""
        out: list[str] = []
        for g in word:
            if out and self._inverse[g] == (out[-1],):
                out.pop()
            else:
                out.append(g)
        return tuple(out)

    def word_quaternion(self, word: Sequence[str]) -> np.ndarray:
        q = np.array([1.0, 0.0, 0.0, 0.0])
        for g in word:
            q = qmul(self._gate_q[g], q)
        return q

    def word_distance(self, word: Sequence[str], u: np.ndarray) -> float:
        a, b = self.word_quaternion(word), quaternion(u)
        return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))

    def mitm(self, u: np.ndarray) -> tuple[tuple[str, ...], np.ndarray]:
        """Best product of two net entries (first k, then j) approximating ``u``."""
        qu = quaternion(u)
        conj = self._quats * np.array([1.0, -1.0, -1.0, -1.0])
        d, j = self._tree.query(qmul(qu[None, :], conj))
        k = int(np.argmin(d))
        j = int(self._index(j[k]))
        return self.words[k] + self.words[j], self.matrices[j] @ self.matrices[k]

    def predicted_depth(self, eps: float) -> int:
        """Smallest d with e_d <= eps under e_{k+1} = c_approx * e_k^{3/2}."""
        e, d = self.base_error, 0
        while e > eps and d < MAX_DEPTH:
            nxt = self.c_approx * e ** 1.5
            if nxt >= e:
                return MAX_DEPTH
            e, d = nxt, d + 1
        return d


def _restore(*args) -> SKCache:
    return SKCache(*args)


def _inverse_pairs(defs) -> set[tuple[int, int]]:
    pairs = set()
    for a, ga in enumerate(defs):
        for b, gb in enumerate(defs):
            if distance(gb.matrix @ ga.matrix, np.eye(2)) < EXACT_TOL:
                pairs.add((a, b))
    return pairs


def _enumerate(basis: GateBasis, L0: int):
    defs = basis.single_qubit_defs()
    if not defs:
        raise CacheError(f"basis {basis.id} has no single-qubit gates")
    cancel = _inverse_pairs(defs)
    words: list[tuple[int, ...]] = [()]
    mats = [np.eye(2, dtype=complex)]
    seen = {tuple(np.round(_canonical(quaternion(mats[0])), 9))}
    frontier = [0]
    for _ in range(L0):
        nxt = []
        for idx in frontier:
            w, m = words[idx], mats[idx]
            for g, gd in enumerate(defs):
                if w and (w[-1], g) in cancel:
                    continue
                prod = gd.matrix @ m
                key = tuple(np.round(_canonical(quaternion(prod)), 9))
                if key in seen:
                    continue
                seen.add(key)
                words.append(w + (g,))
                mats.append(prod)
                nxt.append(len(words) - 1)
        frontier = nxt
    names = [d.mnemonic for d in defs]
    return [tuple(names[g] for g in w) for w in words], np.array(mats)


def _haar_su2(count: int, seed: int) -> np.ndarray:
    q = np.random.default_rng(seed).standard_normal((count, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def _measure(cache: SKCache) -> None:
    d, _ = cache._tree.query(_haar_su2(PROBE_COUNT, PROBE_SEED))
    cache.epsilon0 = float(d.max())
    probes = [quaternion_matrix(q) for q in _haar_su2(RATE_PROBES, RATE_SEED)]
    e0 = max(cache.word_distance(_sk(cache, u, 0, True)[0], u) for u in probes)
    e1 = max(cache.word_distance(_sk(cache, u, 1, True)[0], u) for u in probes)
    cache.base_error = float(e0)
    cache.c_approx = float(e1 / e0 ** 1.5) if e0 > 0 else 0.0


def build_sk_cache(basis: GateBasis, L0: int, allow_coarse: bool = False) -> SKCache:
    """Enumerate every single-qubit word of length <= L0 and index the result.

    ``epsilon0`` is the largest nearest-entry distance seen over 10^4 Haar
    probes.  A net with epsilon0 >= 0.5 is refused unless ``allow_coarse``.
    """
    if not basis.finite:
        raise CacheError(f"basis {basis.id} is not finite")
    if L0 < 1 or L0 > 255:
        raise CacheError(f"L0 must lie in 1..255, got {L0}")
    words, mats = _enumerate(basis, L0)
    cache = SKCache(basis.id, L0, words, mats)
    _measure(cache)
    if cache.epsilon0 >= MAX_EPSILON0 and not allow_coarse:
        raise CacheError(f"L0={L0} gives covering radius {cache.epsilon0:.3f} >= {MAX_EPSILON0}; net unusable")
    return cache


# -- approximation -----------------------------------------------------------

def _sk(cache: SKCache, u: np.ndarray, depth: int, mitm: bool):
    if depth == 0:
        if mitm:
            return cache.mitm(u)
        j, _ = cache.nearest(u)
        return cache.words[j], cache.matrices[j]
    w, m = _sk(cache, u, depth - 1, mitm)
    v, x = group_commutator(u @ m.conj().T)
    wv, mv = _sk(cache, v, depth - 1, mitm)
    wx, mx = _sk(cache, x, depth - 1, mitm)
    word = w + cache.inverse_word(wx) + cache.inverse_word(wv) + wx + wv
    return word, mv @ mx @ mv.conj().T @ mx.conj().T @ m


@dataclass(frozen=True)
class Approximation:
    word: tuple[str, ...]
    distance: float
    depth: int          # -1: plain net lookup


def approximate(target: np.ndarray, eps_gate: float, cache: SKCache, depth: int = MAX_DEPTH) -> Approximation:
    """Shortest rung meeting ``eps_gate``: net lookup, then recursion levels 0..depth.

    Every candidate's distance is recomputed from its gates; BudgetError when
    no rung up to ``depth`` qualifies.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or not np.allclose(target.conj().T @ target, np.eye(2), atol=1e-10, rtol=0):
        raise ValueError("target must be a 2x2 unitary")
    if eps_gate <= 0:
        raise ValueError("eps_gate must be positive")
    j, _ = cache.nearest(target)
    d = cache.word_distance(cache.words[j], target)
    best = Approximation(cache.words[j], d, -1)
    if d <= eps_gate:
        return best
    for level in range(depth + 1):
        word = cache.reduce(_sk(cache, target, level, True)[0])
        d = cache.word_distance(word, target)
        if d < best.distance:
            best = Approximation(word, d, level)
        if d <= eps_gate:
            return Approximation(word, d, level)
    raise BudgetError(
        f"distance {eps_gate:.3g} not reached by depth {depth} (best {best.distance:.3g}); "
        "raise the depth or L0"
    )


def sk_approximate(target: np.ndarray, eps_gate: float, cache: SKCache, depth: int = MAX_DEPTH) -> tuple[str, ...]:
    return approximate(target, eps_gate, cache, depth).word


def sk_plain(target: np.ndarray, cache: SKCache, depth: int) -> tuple[str, ...]:
    """Textbook recursion with a nearest-entry base case (for comparison)."""
    return _sk(cache, np.asarray(target, dtype=complex), depth, False)[0]


# -- file format -------------------------------------------------------------

def save_sk_cache(cache: SKCache, path) -> None:
    basis = builtin_basis(cache.basis_id)
    bid = cache.basis_id.encode()
    out = bytearray(_MAGIC)
    out += struct.pack("<B", len(bid)) + bid
    out += struct.pack("<HI", cache.max_word_length, len(cache))
    for w, m in zip(cache.words, cache.matrices):
        out += struct.pack("<B", len(w))
        out += bytes(basis.opcode(g) for g in w)
        flat = np.stack([m.real, m.imag], axis=-1).reshape(-1)
        out += struct.pack("<8d", *flat)
    Path(path).write_bytes(bytes(out))


def load_sk_cache(path) -> SKCache:
    data = Path(path).read_bytes()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise CacheError(f"{path}: truncated cache file")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4) != _MAGIC:
        raise CacheError(f"{path}: not an SK cache file")
    (blen,) = struct.unpack("<B", take(1))
    bid = take(blen).decode()
    basis = builtin_basis(bid)
    L0, count = struct.unpack("<HI", take(6))
    names = basis.mnemonics
    words, mats = [], []
    for _ in range(count):
        (wl,) = struct.unpack("<B", take(1))
        idx = take(wl)
        if any(i >= len(names) for i in idx):
            raise CacheError(f"{path}: mnemonic index out of range")
        flat = np.array(struct.unpack("<8d", take(64))).reshape(2, 2, 2)
        words.append(tuple(names[i] for i in idx))
        mats.append(flat[..., 0] + 1j * flat[..., 1])
    if pos != len(data):
        raise CacheError(f"{path}: trailing bytes")
    for w, m in zip(words, mats):
        prod = np.eye(2, dtype=complex)
        for g in w:
            prod = basis.gate(g).matrix @ prod
        if np.abs(prod - m).max() > 1e-12:
            raise CacheError(f"{path}: entry {w} does not match its word")
    cache = SKCache(bid, L0, words, np.array(mats))
    _measure(cache)
    return cache
