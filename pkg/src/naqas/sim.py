"""Density-matrix simulation of small parameterized circuits with gate noise.

States are dense complex ``(2**n, 2**n)`` numpy arrays (optionally with
leading batch axes).  Qubit 0 is the most significant bit of the basis
index, so ``|10>`` on two qubits is basis state 2.  Every operation
returns a new array; nothing is mutated in place.

Noise is modeled with single-qubit Kraus channels applied to each qubit a
gate touches, immediately after the gate (both qubits for CNOT, encoding
gates included).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

ROTATION_KINDS = ("rx", "ry", "rz")
GATE_KINDS = ROTATION_KINDS + ("cnot",)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class GateOp:
    """One circuit operation: an RX/RY/RZ rotation or a CNOT.

    Rotations carry ``param_slot``, an index into the trainable angle
    vector; CNOTs carry a ``control`` qubit instead.
    """

    kind: str
    target: int
    control: Optional[int] = None
    param_slot: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "cnot":
            if self.control is None:
                raise ValueError("cnot requires a control qubit")
            if self.control == self.target:
                raise ValueError("cnot control and target must differ")
            if self.param_slot is not None:
                raise ValueError("cnot takes no parameter slot")
        else:
            if self.control is not None:
                raise ValueError(f"{self.kind} takes no control qubit")

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.kind == "cnot":
            return (self.control, self.target)
        return (self.target,)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-gate noise channel configuration.

    ``p`` is the error probability for bitflip/depolarizing; ``t1``/``t2``
    are relaxation/dephasing times and ``tg`` the gate duration (same time
    unit, conventionally microseconds) for the thermal channel.
    """

    channel: str = "none"
    p: float = 0.01
    t1: float = 100.0
    t2: float = 50.0
    tg: float = 0.03

    def __post_init__(self):
        if self.channel not in ("none", "bitflip", "depolarizing", "thermal"):
            raise ValueError(f"unknown noise channel {self.channel!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability must be in [0, 1], got {self.p}")
        if self.t1 <= 0.0:
            raise ValueError(f"t1 must be positive, got {self.t1}")
        if not 0.0 < self.t2 <= 2.0 * self.t1:
            raise ValueError(f"t2 must satisfy 0 < t2 <= 2*t1, got t2={self.t2}, t1={self.t1}")
        if self.tg < 0.0:
            raise ValueError(f"gate time must be non-negative, got {self.tg}")

    @property
    def enabled(self) -> bool:
        return self.channel != "none"


NO_NOISE = NoiseSpec(channel="none")


def rotation_matrix(kind: str, theta: float) -> np.ndarray:
    """2x2 unitary for RX/RY/RZ at angle ``theta``."""
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    if kind == "rx":
        return np.array([[c, -1.0j * s], [-1.0j * s, c]], dtype=complex)
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        return np.array([[c - 1.0j * s, 0.0], [0.0, c + 1.0j * s]], dtype=complex)
    raise ValueError(f"not a rotation kind: {kind!r}")


@functools.lru_cache(maxsize=64)
def _kraus_cached(spec: NoiseSpec) -> tuple[np.ndarray, ...]:
    if spec.channel == "bitflip":
        ops = (np.sqrt(1.0 - spec.p) * np.eye(2, dtype=complex),
               np.sqrt(spec.p) * PAULI_X)
    elif spec.channel == "depolarizing":
        ops = (np.sqrt(1.0 - spec.p) * np.eye(2, dtype=complex),
               np.sqrt(spec.p / 3.0) * PAULI_X,
               np.sqrt(spec.p / 3.0) * PAULI_Y,
               np.sqrt(spec.p / 3.0) * PAULI_Z)
    elif spec.channel == "thermal":
        ops = tuple(_thermal_kraus(spec.t1, spec.t2, spec.tg))
    else:
        raise ValueError("noiseless spec has no Kraus operators")
    for op in ops:
        op.setflags(write=False)
    return ops


def kraus_operators(spec: NoiseSpec) -> list[np.ndarray]:
    """Single-qubit Kraus operators realizing the channel; Σ K†K = I."""
    return list(_kraus_cached(spec))


def _thermal_kraus(t1: float, t2: float, tg: float) -> list[np.ndarray]:
    """Kraus set of the T1/T2 relaxation channel over a gate of duration tg.

    The channel keeps |0> fixed, decays the |1> population with survival
    probability e1 = exp(-tg/t1) and damps coherences by e2 = exp(-tg/t2).
    Operators come from the eigendecomposition of the channel's Choi
    matrix, which is positive semidefinite exactly when t2 <= 2*t1.
    """
    e1 = np.exp(-tg / t1)
    e2 = np.exp(-tg / t2)
    # Choi matrix C[2i+k, 2j+l] = channel(|i><j|)[k, l].
    choi = np.zeros((4, 4), dtype=complex)
    choi[0, 0] = 1.0
    choi[0, 3] = e2
    choi[3, 0] = e2
    choi[2, 2] = 1.0 - e1
    choi[3, 3] = e1
    evals, evecs = np.linalg.eigh(choi)
    ops = []
    for lam, vec in zip(evals, evecs.T):
        if lam > 1e-12:
            ops.append(np.sqrt(lam) * vec.reshape(2, 2).T)  # vec[2i+k] -> K[k,i]
    return ops


def kraus_completeness_defect(ops: Sequence[np.ndarray]) -> float:
    """max|Σ K†K − I|; zero for a trace-preserving channel."""
    acc = sum(op.conj().T @ op for op in ops)
    return float(np.max(np.abs(acc - np.eye(acc.shape[0]))))


# ---------------------------------------------------------------------------
# state construction and low-level operator application
# ---------------------------------------------------------------------------

def zero_state(n_qubits: int, batch: tuple[int, ...] = ()) -> np.ndarray:
    """Density matrix of |0...0>, optionally with leading batch axes."""
    dim = 1 << n_qubits
    rho = np.zeros(batch + (dim, dim), dtype=complex)
    rho[..., 0, 0] = 1.0
    return rho


def n_qubits_of(rho: np.ndarray) -> int:
    dim = rho.shape[-1]
    n = dim.bit_length() - 1
    if 1 << n != dim or rho.shape[-2] != dim:
        raise ValueError(f"not a qubit density matrix shape: {rho.shape}")
    return n


def _check_qubit(qubit: int, n_qubits: int):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


def _gate_tensor(mat: np.ndarray) -> np.ndarray:
    """(2,2,2,2) superoperator tensor of rho -> M rho M†."""
    return np.einsum("ip,jq->ijpq", mat, mat.conj())


def _channel_tensor_from_ops(ops: Sequence[np.ndarray]) -> np.ndarray:
    return sum(_gate_tensor(op) for op in ops)


@functools.lru_cache(maxsize=64)
def _channel_tensor(spec: NoiseSpec) -> np.ndarray:
    t = _channel_tensor_from_ops(_kraus_cached(spec))
    t.setflags(write=False)
    return t


def _adjoint_tensor(t: np.ndarray) -> np.ndarray:
    # Heisenberg-picture map: A -> Σ K† A K.
    return t.transpose(2, 3, 0, 1).conj()


def _apply_tensor_1q(t: np.ndarray, rho: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply a (2,2,2,2) single-qubit superoperator tensor on ``qubit``.

    tensordot routes the contraction through BLAS, which is much faster
    than a direct einsum at these sizes.
    """
    dim = 1 << n_qubits
    a = 1 << qubit                # configurations of qubits above `qubit`
    b = dim >> (qubit + 1)        # configurations below
    shape = rho.shape
    rho_r = rho.reshape((-1, a, 2, b, a, 2, b))
    out = np.tensordot(rho_r, t, axes=([2, 5], [2, 3]))   # -> (B, a, b, a, b, i, j)
    return np.moveaxis(out, (5, 6), (2, 5)).reshape(shape)


def _cnot_permutation(control: int, target: int, n_qubits: int) -> np.ndarray:
    cbit = n_qubits - 1 - control
    tbit = n_qubits - 1 - target
    idx = np.arange(1 << n_qubits)
    return idx ^ (((idx >> cbit) & 1) << tbit)


def _apply_permutation(perm: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return rho[..., perm[:, None], perm[None, :]]


# ---------------------------------------------------------------------------
# public single-state operations
# ---------------------------------------------------------------------------

def apply_gate(rho: np.ndarray, gate: GateOp, theta: Optional[float] = None) -> np.ndarray:
    """Return U rho U† with the gate's unitary embedded at its qubits."""
    n = n_qubits_of(rho)
    for q in gate.qubits:
        _check_qubit(q, n)
    if gate.kind == "cnot":
        if theta is not None:
            raise ValueError("cnot takes no angle")
        return _apply_permutation(_cnot_permutation(gate.control, gate.target, n), rho)
    if theta is None:
        raise ValueError(f"{gate.kind} gate requires an angle")
    t = _gate_tensor(rotation_matrix(gate.kind, theta))
    return _apply_tensor_1q(t, rho, gate.target, n)


def apply_channel(rho: np.ndarray, spec: NoiseSpec, qubit: int) -> np.ndarray:
    """Return Σ K rho K† for the channel acting on one qubit."""
    n = n_qubits_of(rho)
    _check_qubit(qubit, n)
    if not spec.enabled:
        return rho.copy()
    return _apply_tensor_1q(_channel_tensor(spec), rho, qubit, n)


def expect_z(rho: np.ndarray, qubit: int) -> float:
    """tr(Z_qubit rho); the imaginary residue is discarded."""
    n = n_qubits_of(rho)
    _check_qubit(qubit, n)
    diag = np.einsum("...ii->...i", rho).real
    return float(np.sum(_z_signs(n)[qubit] * diag))


def expect_all_z(rho: np.ndarray) -> np.ndarray:
    """Vector of per-qubit <Z>, shape (..., n_qubits)."""
    n = n_qubits_of(rho)
    diag = np.einsum("...ii->...i", rho).real
    return diag @ _z_signs(n).T


@functools.lru_cache(maxsize=16)
def _z_signs(n_qubits: int) -> np.ndarray:
    """(n_qubits, dim) matrix of Z eigenvalue signs per basis state."""
    dim = 1 << n_qubits
    idx = np.arange(dim)
    signs = np.empty((n_qubits, dim))
    for q in range(n_qubits):
        signs[q] = 1.0 - 2.0 * ((idx >> (n_qubits - 1 - q)) & 1)
    signs.setflags(write=False)
    return signs


# ---------------------------------------------------------------------------
# circuit execution
# ---------------------------------------------------------------------------

def encoding_gates(n_features: int, n_qubits: int) -> list[GateOp]:
    """Data-encoding layer: RY per qubit for the first ``n_qubits`` features,
    then RZ gates assigned cyclically for the remainder."""
    gates = []
    for i in range(min(n_features, n_qubits)):
        gates.append(GateOp("ry", target=i))
    for j in range(n_qubits, n_features):
        gates.append(GateOp("rz", target=(j - n_qubits) % n_qubits))
    return gates


def _noise_after(rho: np.ndarray, gate: GateOp, noise: NoiseSpec, n: int) -> np.ndarray:
    if noise.enabled:
        t = _channel_tensor(noise)
        for q in gate.qubits:
            rho = _apply_tensor_1q(t, rho, q, n)
    return rho


def run_circuit(n_qubits: int,
                gates: Sequence[GateOp],
                theta: Sequence[float],
                encoding_angles: Sequence[float] = (),
                noise: NoiseSpec = NO_NOISE) -> np.ndarray:
    """Evolve |0...0> through the encoding layer and the gate list.

    After every gate (encoding gates included) the noise channel is applied
    to each qubit the gate touched.  ``encoding_angles`` may be empty, in
    which case no encoding layer is emitted.
    """
    theta = np.asarray(theta, dtype=float)
    angles = []
    for g in gates:
        if g.kind == "cnot":
            angles.append(None)
        else:
            if g.param_slot is None or not 0 <= g.param_slot < theta.size:
                raise ValueError(f"parameter slot {g.param_slot} out of range "
                                 f"for {theta.size} parameters")
            angles.append(float(theta[g.param_slot]))
    return _run(n_qubits, list(gates), angles, encoding_angles, noise)


def _run(n_qubits, gates, gate_angles, encoding_angles, noise) -> np.ndarray:
    rho = zero_state(n_qubits)
    for g, ang in zip(encoding_gates(len(encoding_angles), n_qubits), encoding_angles):
        rho = _apply_tensor_1q(_gate_tensor(rotation_matrix(g.kind, ang)), rho, g.target, n_qubits)
        rho = _noise_after(rho, g, noise, n_qubits)
    for g, ang in zip(gates, gate_angles):
        if g.kind == "cnot":
            for q in g.qubits:
                _check_qubit(q, n_qubits)
            rho = _apply_permutation(_cnot_permutation(g.control, g.target, n_qubits), rho)
        else:
            _check_qubit(g.target, n_qubits)
            rho = _apply_tensor_1q(_gate_tensor(rotation_matrix(g.kind, ang)), rho, g.target, n_qubits)
        rho = _noise_after(rho, g, noise, n_qubits)
    return rho


LossFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


def param_shift_grad(n_qubits: int,
                     gates: Sequence[GateOp],
                     theta: Sequence[float],
                     encoding_angles: Sequence[float],
                     noise: NoiseSpec,
                     loss_fn: LossFn) -> np.ndarray:
    """Gradient of ``loss_fn`` over the per-qubit <Z> vector w.r.t. theta.

    Uses the exact two-point rule per rotation gate,
    d<.>/dθ = [f(θ+π/2) − f(θ−π/2)] / 2, chained with the analytic
    derivative of the downstream loss.  ``loss_fn(z)`` must return
    ``(value, dvalue_dz)``.  Gates sharing a slot accumulate.
    """
    theta = np.asarray(theta, dtype=float)
    gates = list(gates)
    base_angles = [None if g.kind == "cnot" else float(theta[g.param_slot]) for g in gates]
    z0 = expect_all_z(_run(n_qubits, gates, base_angles, encoding_angles, noise))
    _, dz = loss_fn(z0)
    dz = np.asarray(dz, dtype=float)
    grad = np.zeros_like(theta)
    for gi, g in enumerate(gates):
        if g.kind == "cnot":
            continue
        shifted = list(base_angles)
        shifted[gi] = base_angles[gi] + np.pi / 2.0
        z_plus = expect_all_z(_run(n_qubits, gates, shifted, encoding_angles, noise))
        shifted[gi] = base_angles[gi] - np.pi / 2.0
        z_minus = expect_all_z(_run(n_qubits, gates, shifted, encoding_angles, noise))
        grad[g.param_slot] += float(dz @ (z_plus - z_minus)) / 2.0
    return grad


# ---------------------------------------------------------------------------
# compiled batched evaluator (the training workhorse)
# ---------------------------------------------------------------------------

_ROT, _ENT, _CHAN = 0, 1, 2


class CompiledAnsatz:
    """Batched evaluator for a fixed gate list under a fixed noise model.

    Accepts pre-encoded initial states of shape (batch, dim, dim) and
    evaluates expectations and exact parameter-shift gradients.  The
    gradient pass runs the circuit once forward, once backward in the
    Heisenberg picture, and two local gate applications per parameter,
    which reproduces the two-point shift rule values at a fraction of the
    cost.  Each rotation step folds the trailing noise channel into a
    single superoperator tensor.
    """

    def __init__(self, n_qubits: int, gates: Sequence[GateOp], noise: NoiseSpec = NO_NOISE):
        self.n_qubits = n_qubits
        self.noise = noise
        self.n_slots = 1 + max((g.param_slot for g in gates if g.param_slot is not None), default=-1)
        if noise.enabled:
            self._chan = np.ascontiguousarray(_channel_tensor(noise))
            self._chan_adj = np.ascontiguousarray(_adjoint_tensor(self._chan))
            self._chan_super = self._chan.reshape(4, 4)
        else:
            self._chan = self._chan_adj = self._chan_super = None
        self._steps = []
        for g in gates:
            if g.kind == "cnot":
                _check_qubit(g.control, n_qubits)
                _check_qubit(g.target, n_qubits)
                perm = _cnot_permutation(g.control, g.target, n_qubits)
                self._steps.append((_ENT, perm, None, None))
                if noise.enabled:
                    self._steps.append((_CHAN, g.control, None, None))
                    self._steps.append((_CHAN, g.target, None, None))
            else:
                _check_qubit(g.target, n_qubits)
                self._steps.append((_ROT, g.target, g.param_slot, g.kind))

    def _rot_tensor(self, kind: str, angle: float) -> np.ndarray:
        t = _gate_tensor(rotation_matrix(kind, angle))
        if self._chan_super is not None:
            t = (self._chan_super @ t.reshape(4, 4)).reshape(2, 2, 2, 2)
        return t

    def run(self, theta: np.ndarray, rho: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        for tag, q, slot, kind in self._steps:
            if tag == _ROT:
                rho = _apply_tensor_1q(self._rot_tensor(kind, theta[slot]), rho, q, n)
            elif tag == _ENT:
                rho = _apply_permutation(q, rho)
            else:
                rho = _apply_tensor_1q(self._chan, rho, q, n)
        return rho

    def expectations(self, theta: np.ndarray, rho0: np.ndarray) -> np.ndarray:
        return expect_all_z(self.run(theta, rho0))

    def value_and_grad(self, theta: np.ndarray, rho0: np.ndarray,
                       loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]]):
        """Return (z, loss, dloss_dtheta) for batched states ``rho0``.

        ``loss_fn`` maps the batched expectation matrix z of shape
        (batch, n_qubits) to ``(loss, dloss_dz)`` with dloss_dz of the
        same shape as z.
        """
        n = self.n_qubits
        half_pi = np.pi / 2.0
        rho = rho0
        saved = []
        for tag, q, slot, kind in self._steps:
            if tag == _ROT:
                saved.append(rho)
                rho = _apply_tensor_1q(self._rot_tensor(kind, theta[slot]), rho, q, n)
            elif tag == _ENT:
                rho = _apply_permutation(q, rho)
            else:
                rho = _apply_tensor_1q(self._chan, rho, q, n)
        z = expect_all_z(rho)
        loss, dz = loss_fn(z)

        dim = 1 << n
        obs = np.zeros(rho0.shape[:-2] + (dim, dim), dtype=complex)
        diag = np.asarray(dz, dtype=float) @ _z_signs(n)
        obs[..., np.arange(dim), np.arange(dim)] = diag

        grad = np.zeros(self.n_slots)
        for tag, q, slot, kind in reversed(self._steps):
            if tag == _ROT:
                rho_pre = saved.pop()
                base = theta[slot]
                t_plus = _apply_tensor_1q(self._rot_tensor(kind, base + half_pi), rho_pre, q, n)
                t_minus = _apply_tensor_1q(self._rot_tensor(kind, base - half_pi), rho_pre, q, n)
                tr_plus = np.einsum("bij,bji->", obs, t_plus).real
                tr_minus = np.einsum("bij,bji->", obs, t_minus).real
                grad[slot] += 0.5 * (tr_plus - tr_minus)
                obs = _apply_tensor_1q(_adjoint_tensor(self._rot_tensor(kind, base)), obs, q, n)
            elif tag == _ENT:
                obs = _apply_permutation(q, obs)
            else:
                obs = _apply_tensor_1q(self._chan_adj, obs, q, n)
        return z, loss, grad


def encode_states(features: np.ndarray, n_qubits: int, noise: NoiseSpec = NO_NOISE) -> np.ndarray:
    """Batched encoded initial states for a (batch, n_features) matrix.

    Applies the encoding layer (with per-gate noise) to |0...0> for each
    sample; the result feeds :class:`CompiledAnsatz`.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    batch, n_feat = features.shape
    rho = zero_state(n_qubits, batch=(batch,))
    chan = _channel_tensor(noise) if noise.enabled else None
    for fi, g in enumerate(encoding_gates(n_feat, n_qubits)):
        # per-sample angles: build the batch of superoperator tensors
        mats = _rotation_batch(g.kind, features[:, fi])
        t = np.einsum("bip,bjq->bijpq", mats, mats.conj())
        rho = _apply_tensor_1q_batchwise(t, rho, g.target, n_qubits)
        if chan is not None:
            rho = _apply_tensor_1q(chan, rho, g.target, n_qubits)
    return rho


def _rotation_batch(kind: str, angles: np.ndarray) -> np.ndarray:
    c = np.cos(angles / 2.0)
    s = np.sin(angles / 2.0)
    mats = np.zeros((angles.size, 2, 2), dtype=complex)
    if kind == "rx":
        mats[:, 0, 0] = c
        mats[:, 1, 1] = c
        mats[:, 0, 1] = -1.0j * s
        mats[:, 1, 0] = -1.0j * s
    elif kind == "ry":
        mats[:, 0, 0] = c
        mats[:, 1, 1] = c
        mats[:, 0, 1] = -s
        mats[:, 1, 0] = s
    elif kind == "rz":
        mats[:, 0, 0] = c - 1.0j * s
        mats[:, 1, 1] = c + 1.0j * s
    else:
        raise ValueError(f"not a rotation kind: {kind!r}")
    return mats


def _apply_tensor_1q_batchwise(t: np.ndarray, rho: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Like _apply_tensor_1q but with a distinct tensor per batch entry."""
    dim = 1 << n_qubits
    a = 1 << qubit
    b = dim >> (qubit + 1)
    shape = rho.shape
    rho_r = rho.reshape((shape[0], a, 2, b, a, 2, b))
    out = np.einsum("bijpq,bApBCqD->bAiBCjD", t, rho_r)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# validity checks (used by the test-suite; not enforced at runtime)
# ---------------------------------------------------------------------------

def hermiticity_defect(rho: np.ndarray) -> float:
    return float(np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj())))


def trace_defect(rho: np.ndarray) -> float:
    return float(np.max(np.abs(np.einsum("...ii->...", rho) - 1.0)))


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh(rho)))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("...ij,...ji->...", rho, rho)))
