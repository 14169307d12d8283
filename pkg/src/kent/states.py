"""Named pure states, white-noise families and random state samplers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, UnknownState
from .linalg import projector


def _ket(n: int, terms: dict[str, float]) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    for bits, amp in terms.items():
        psi[int(bits, 2)] += amp
    return psi / np.linalg.norm(psi)


def ghz(n: int) -> np.ndarray:
    return _ket(n, {"0" * n: 1.0, "1" * n: 1.0})


def w_state(n: int) -> np.ndarray:
    return _ket(n, {"0" * i + "1" + "0" * (n - i - 1): 1.0 for i in range(n)})


def singlet() -> np.ndarray:
    return _ket(2, {"01": 1.0, "10": -1.0})


def cluster4() -> np.ndarray:
    return _ket(4, {"0000": 1.0, "0011": 1.0, "1100": 1.0, "1111": -1.0})


def dicke24() -> np.ndarray:
    return _ket(4, {b: 1.0 for b in ("0011", "1100", "0101", "0110", "1001", "1010")})


def singlet_s4() -> np.ndarray:
    return _ket(4, {"0011": 1.0, "1100": 1.0, "0101": -0.5, "0110": -0.5, "1001": -0.5, "1010": -0.5})


def werner_base(n: int) -> np.ndarray:
    """Pure part of the n-qubit Werner family: the singlet for n=2, GHZ_n above."""
    return singlet() if n == 2 else ghz(n)


_FIXED_N = {"cl4": 4, "d24": 4, "s4": 4, "bell": 2, "singlet": 2}
_ALIASES = {
    "ghz": "ghz",
    "w": "w",
    "werner": "werner",
    "cl4": "cl4",
    "cluster": "cl4",
    "d24": "d24",
    "dicke": "d24",
    "s4": "s4",
    "singlets4": "s4",
    "singlet_s4": "s4",
    "bell": "bell",
    "phi+": "bell",
    "singlet": "singlet",
}
NAMES = tuple(sorted(set(_ALIASES.values())))


def canonical_name(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise UnknownState(f"unknown state {name!r}; known: {', '.join(NAMES)}") from None


def named_pure(name: str, n: int | None = None) -> np.ndarray:
    """Amplitudes of a named pure state on ``n`` qubits.

    ``ghz``, ``w`` and ``werner`` take any ``n >= 2``; ``cl4``, ``d24`` and
    ``s4`` are 4-qubit states; ``bell`` (``|Phi+>``) and ``singlet`` are
    2-qubit states.
    """
    key = canonical_name(name)
    fixed = _FIXED_N.get(key)
    if n is None:
        if fixed is None:
            raise UnknownState(f"state {name!r} needs a qubit count")
        n = fixed
    if fixed is not None and n != fixed:
        raise UnknownState(f"state {name!r} is only defined for n={fixed}")
    if n < 2:
        raise UnknownState(f"state {name!r} needs n >= 2")
    if key == "ghz":
        return ghz(n)
    if key == "w":
        return w_state(n)
    if key == "werner":
        return werner_base(n)
    return {"cl4": cluster4, "d24": dicke24, "s4": singlet_s4, "bell": lambda: ghz(2), "singlet": singlet}[key]()


@dataclass(frozen=True)
class NoisyFamily:
    """``p |psi><psi| + (1 - p) I / 2^n`` for a named or custom pure state."""

    base: str
    n: int
    p: float = 1.0
    amplitudes: tuple[complex, ...] | None = None

    def pure(self) -> np.ndarray:
        if self.base == "custom":
            if self.amplitudes is None:
                raise InvalidParameter("custom family needs amplitudes")
            psi = np.asarray(self.amplitudes, dtype=complex)
            if psi.shape != (2**self.n,):
                raise InvalidParameter(f"custom amplitudes must have length {2**self.n}")
            return psi / np.linalg.norm(psi)
        return named_pure(self.base, self.n)

    def at(self, p: float) -> "NoisyFamily":
        return NoisyFamily(self.base, self.n, float(p), self.amplitudes)

    @property
    def label(self) -> str:
        return f"{self.base}{self.n}"


def family_state(family: NoisyFamily, p: float | None = None) -> np.ndarray:
    p = family.p if p is None else p
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"mixing weight p={p} outside [0, 1]")
    d = 2**family.n
    return p * projector(family.pure()) + (1 - p) * np.eye(d) / d


def parse_family(text: str) -> NoisyFamily:
    """Parse ``family:<name>,n=<int>,p=<float>`` (the ``family:`` prefix is optional)."""
    body = text.strip()
    if body.startswith("family:"):
        body = body[len("family:") :]
    parts = [s.strip() for s in body.split(",") if s.strip()]
    if not parts:
        raise InvalidParameter(f"empty family spec {text!r}")
    name, opts = parts[0], {}
    for item in parts[1:]:
        if "=" not in item:
            raise InvalidParameter(f"bad family option {item!r}")
        key, val = item.split("=", 1)
        opts[key.strip()] = val.strip()
    key = canonical_name(name)
    try:
        n = int(opts.pop("n")) if "n" in opts else _FIXED_N.get(key)
        p = float(opts.pop("p", "1"))
    except ValueError:
        raise InvalidParameter(f"bad family spec {text!r}") from None
    if opts:
        raise InvalidParameter(f"unknown family options {sorted(opts)}")
    if n is None:
        raise InvalidParameter(f"family {name!r} needs n=<qubits>")
    named_pure(key, n)
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"mixing weight p={p} outside [0, 1]")
    return NoisyFamily(key, n, p)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_density(n: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Induced (Hilbert-Schmidt for full rank) random state ``G G^dagger / Tr``."""
    d = 2**n
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise InvalidParameter(f"rank {rank} outside 1..{d}")
    rng = _rng(seed)
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def haar_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def random_product_pure(n: int, seed=None, dims: Sequence[int] | None = None) -> np.ndarray:
    rng = _rng(seed)
    dims = dims or [2] * n
    vec = np.ones(1, dtype=complex)
    for d in dims:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        vec = np.kron(vec, v / np.linalg.norm(v))
    return vec


def random_separable(n: int, terms: int = 1, seed=None) -> np.ndarray:
    """Dirichlet-weighted mixture of ``terms`` Haar-random fully product pure states."""
    if terms < 1:
        raise InvalidParameter("terms must be at least 1")
    rng = _rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    d = 2**n
    rho = np.zeros((d, d), dtype=complex)
    for w in weights:
        rho += w * projector(random_product_pure(n, rng))
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real
