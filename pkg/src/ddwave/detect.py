"""Maximum-likelihood and message-passing detectors for stacked linear systems.

Both detectors see one effective system y = H x + w with H of shape
(N_r * N, N): receive antennas are handled jointly by stacking their rows.
The ML detector enumerates the full constellation power set (desk-scale
frames only); the MP detector runs Gaussian-approximation message passing on
the sparse factor graph of H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ML_CAP = 16384  # largest |alphabet|^N the ML detector will enumerate


@dataclass(frozen=True)
class Alphabet:
    """Unit-average-energy constellation with a fixed bit labeling."""

    name: str
    points: tuple[complex, ...]

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(len(self.points)))

    def points_array(self) -> np.ndarray:
        return np.asarray(self.points)

    def bits_to_symbols(self, bits: np.ndarray) -> np.ndarray:
        bps = self.bits_per_symbol
        if len(bits) % bps:
            raise ValueError(f"bit count {len(bits)} not a multiple of {bps}")
        idx = np.zeros(len(bits) // bps, dtype=int)
        for b in range(bps):
            idx = (idx << 1) | np.asarray(bits[b::bps], dtype=int)
        return self.points_array()[idx]

    def symbols_to_indices(self, symbols: np.ndarray) -> np.ndarray:
        """Hard-slice to the nearest constellation point index."""
        d = np.abs(np.asarray(symbols)[..., None] - self.points_array())
        return np.argmin(d, axis=-1)

    def indices_to_bits(self, idx: np.ndarray) -> np.ndarray:
        bps = self.bits_per_symbol
        bits = np.zeros((len(idx), bps), dtype=int)
        for b in range(bps):
            bits[:, bps - 1 - b] = (idx >> b) & 1
        return bits.reshape(-1)

    def symbols_to_bits(self, symbols: np.ndarray) -> np.ndarray:
        return self.indices_to_bits(self.symbols_to_indices(symbols))


def bpsk() -> Alphabet:
    return Alphabet(name="bpsk", points=(1 + 0j, -1 + 0j))


def qam4() -> Alphabet:
    s = 1 / np.sqrt(2)
    # Gray labeling: index b1 b0 -> ((1-2 b1) + j(1-2 b0)) / sqrt(2)
    return Alphabet(
        name="qam4",
        points=(
            complex(s, s),
            complex(s, -s),
            complex(-s, s),
            complex(-s, -s),
        ),
    )


def get_alphabet(name: str) -> Alphabet:
    if name == "bpsk":
        return bpsk()
    if name == "qam4":
        return qam4()
    raise ValueError(f"unknown alphabet {name!r}")


@dataclass(frozen=True)
class StackedSystem:
    """y = H x + w with noise variance n0 per receive sample."""

    H: np.ndarray
    y: np.ndarray
    n0: float

    def __post_init__(self):
        if self.H.shape[0] != len(self.y):
            raise ValueError(f"H rows {self.H.shape[0]} != len(y) {len(self.y)}")


_cand_cache: dict[tuple[str, int], np.ndarray] = {}


def candidate_matrix(alphabet: Alphabet, N: int) -> np.ndarray:
    """All |A|^N transmit vectors, shape (|A|^N, N), row-major in symbol index."""
    Q = len(alphabet.points)
    if Q**N > _ML_CAP:
        raise ValueError(f"search space {Q}^{N} exceeds cap {_ML_CAP}")
    key = (alphabet.name, N)
    if key not in _cand_cache:
        idx = np.indices((Q,) * N).reshape(N, -1).T  # row c = digits of c base Q
        _cand_cache[key] = alphabet.points_array()[idx]
    return _cand_cache[key]


def ml_detect(sys: StackedSystem, alphabet: Alphabet) -> np.ndarray:
    """argmin_x ||y - H x||^2 over the full constellation grid.

    Ties resolve to the first candidate in enumeration order (row-major over
    alphabet indices, leftmost symbol most significant).
    """
    N = sys.H.shape[1]
    X = candidate_matrix(alphabet, N)
    S = sys.H @ X.T  # (m, C)
    r = np.sum(np.abs(sys.y[:, None] - S) ** 2, axis=0)
    return X[np.argmin(r)].copy()


def ml_detect_batch(
    H: np.ndarray, y: np.ndarray, alphabet: Alphabet, chunk_cells: int = 4_000_000
) -> np.ndarray:
    """Vectorized ML over a batch: H (B, m, N), y (B, m) -> symbols (B, N).

    Candidates are processed in chunks to bound the (B, m, chunk) workspace.
    """
    B, m, N = H.shape
    X = candidate_matrix(alphabet, N)
    C = X.shape[0]
    step = max(1, min(C, chunk_cells // max(1, B * m)))
    best_val = np.full(B, np.inf)
    best_idx = np.zeros(B, dtype=int)
    for lo in range(0, C, step):
        Xc = X[lo : lo + step]
        S = H @ Xc.T  # (B, m, c)
        r = np.sum(np.abs(y[:, :, None] - S) ** 2, axis=1)
        cand_best = np.argmin(r, axis=1)
        cand_val = r[np.arange(B), cand_best]
        better = cand_val < best_val
        best_val = np.where(better, cand_val, best_val)
        best_idx = np.where(better, lo + cand_best, best_idx)
    return X[best_idx]


@dataclass
class MpResult:
    symbols: np.ndarray
    converged: bool
    iterations: int


def mp_detect(
    sys: StackedSystem,
    alphabet: Alphabet,
    max_iter: int = 30,
    damping: float = 0.6,
    tol: float = 1e-6,
    tap_prune_eps: float = 1e-3,
) -> MpResult:
    """Gaussian-approximation message passing on the sparse graph of H.

    Entries below tap_prune_eps * max|H| are dropped from the graph.  damping
    is the fraction of the old variable-to-observation message retained
    (0 = undamped).  Returns hard max-posterior symbols; if the message change
    never falls below tol the best-so-far decision is returned with
    converged=False.
    """
    Hm = sys.H
    n_var = Hm.shape[1]
    points = alphabet.points_array()
    Q = len(points)
    abs2 = np.abs(points) ** 2

    mag = np.abs(Hm)
    keep = mag > tap_prune_eps * (mag.max() if mag.size else 0.0)
    rows, cols = np.nonzero(keep)
    vals = Hm[rows, cols]
    E = len(vals)
    if E == 0:
        return MpResult(symbols=np.full(n_var, points[0]), converged=True, iterations=0)
    n_obs = Hm.shape[0]
    av2 = np.abs(vals) ** 2

    p = np.full((E, Q), 1.0 / Q)
    T = np.zeros((n_var, Q))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = p @ points
        var = p @ abs2 - np.abs(mu) ** 2
        # observation-side totals, then exclude own edge
        S = np.zeros(n_obs, dtype=complex)
        V = np.full(n_obs, sys.n0)
        np.add.at(S, rows, vals * mu)
        np.add.at(V, rows, av2 * var)
        mean_excl = S[rows] - vals * mu
        var_excl = np.maximum(V[rows] - av2 * var, 1e-30)
        resid = sys.y[rows, None] - mean_excl[:, None] - vals[:, None] * points[None, :]
        L = -np.abs(resid) ** 2 / var_excl[:, None]
        # variable-side totals, then exclude own edge
        T = np.zeros((n_var, Q))
        np.add.at(T, cols, L)
        msg = T[cols] - L
        msg -= msg.max(axis=1, keepdims=True)
        msg = np.exp(msg)
        msg /= msg.sum(axis=1, keepdims=True)
        p_new = (1.0 - damping) * msg + damping * p
        delta = np.max(np.abs(p_new - p))
        p = p_new
        if delta < tol:
            converged = True
            break
    return MpResult(symbols=points[np.argmax(T, axis=1)], converged=converged, iterations=it)
