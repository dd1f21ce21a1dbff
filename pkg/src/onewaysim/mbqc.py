"""One-way single-qubit rotations on the hyperentangled cluster.

The 4-qubit cluster is reduced to a 3-qubit linear cluster by reordering the
register as (memory spatial, photon spatial, photon polarization, memory
branch), applying Hadamards to the outer qubits and postselecting the first
one in the computational basis.  Measuring the remaining first two qubits in
equatorial bases B(alpha), B(beta') then steers the last qubit through

    sigma_x^s3  sigma_z^s2  R_x((-1)^(s2+1) * beta')  R_z(-alpha) |+>

per measurement branch (s2, s3).  With feedforward the second basis angle is
beta' = (-1)^s2 * beta and the Pauli byproducts are undone, so every branch
lands on the target R_x(-beta) R_z(-alpha) |+>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .cluster import PreparationParams, cluster_statevector, prepare_cluster
from .measure import RandomSource, _as_generator, basis_vectors, MeasurementBasis
from .noise import StorageNoiseParams, apply_storage
from .qcore import (
    HADAMARD,
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    StateVector,
    apply_unitary,
    fidelity,
    permute_qubits,
    phase_aligned_distance,
    plus_ket,
    rotation_gate,
    tensor,
)

# Register order used by the reduction: new qubit i is old qubit LIN3_ORDER[i-1].
LIN3_ORDER = (4, 2, 1, 3)

#: Postselection outcome for the removed qubit.  Outcome 1 yields the same
#: protocol after a known local Z on the first remaining qubit (see tests).
POSTSELECT_OUTCOME = 0


@dataclass(frozen=True)
class Lin3State:
    """Three-qubit linear cluster obtained from the 4-qubit resource."""

    state: Union[StateVector, DensityMatrix]
    postselect_prob: float

    def __post_init__(self):
        if not 0.0 < self.postselect_prob <= 1.0 + 1e-12:
            raise ValueError(f"postselect_prob must be in (0, 1], got {self.postselect_prob}")
        if self.state.n_qubits != 3:
            raise ValueError("lin3 state must live on 3 qubits")


@dataclass(frozen=True)
class RotationNoise:
    """Noise bundle for a rotation run: preparation imperfections plus
    storage dephasing of the memory qubits for ``storage_time`` microseconds."""

    prep: PreparationParams
    storage: StorageNoiseParams
    storage_time: float

    def __post_init__(self):
        if self.storage_time < 0:
            raise ValueError(f"storage_time must be >= 0, got {self.storage_time}")


@dataclass(frozen=True)
class RotationRequest:
    """One rotation-protocol run: angles, feedforward switch, shot budget."""

    alpha: float
    beta: float
    feedforward_enabled: bool = True
    shots: int = 0  # 0 = exact branch enumeration, >= 1 = sampled weights
    noise: Optional[RotationNoise] = None

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("angles must be finite")
        if self.shots < 0:
            raise ValueError(f"shots must be >= 0, got {self.shots}")


@dataclass(frozen=True)
class BranchOutput:
    probability: float
    state: DensityMatrix  # single-qubit output before correction


@dataclass(frozen=True)
class RotationResult:
    """Per-branch outputs and the corrected mixture for one protocol run."""

    branch_outputs: dict
    corrected_output: DensityMatrix
    target: StateVector
    fidelity: float

    def __post_init__(self):
        total = sum(b.probability for b in self.branch_outputs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"branch probabilities sum to {total}, expected 1")
        if not -1e-12 <= self.fidelity <= 1.0 + 1e-12:
            raise ValueError(f"fidelity out of [0, 1]: {self.fidelity}")


@dataclass(frozen=True)
class FeedforwardTrace:
    """Event record of one shot: adaptive basis choice and Pauli corrections."""

    s2: int
    basis_angle_q3: float
    s3: int
    z_power: int
    x_power: int

    def events(self) -> tuple:
        return (
            ("measure", 2, self.s2),
            ("basis", 3, self.basis_angle_q3),
            ("measure", 3, self.s3),
            ("correct", 4, f"Z^{self.z_power} X^{self.x_power}"),
        )


def _project_drop_first(state, bra: np.ndarray):
    """Project the first qubit onto <bra| and drop it; returns (state', prob)."""
    n = state.n_qubits
    rest = 2 ** (n - 1)
    if isinstance(state, StateVector):
        block = state.amplitudes.reshape(2, rest)
        vec = bra @ block
        prob = float(np.real(np.vdot(vec, vec)))
        return vec, prob
    block = state.entries.reshape(2, rest, 2, rest)
    mat = np.einsum("a,abcd,c->bd", bra, block, bra.conj())
    prob = float(np.real(np.trace(mat)))
    return mat, prob


def to_lin3(cluster, postselect_outcome: int = POSTSELECT_OUTCOME) -> Lin3State:
    """Reduce the 4-qubit cluster to the 3-qubit linear cluster.

    Reorders the register to LIN3_ORDER, applies H on the new outer qubits
    (1, 4) and removes qubit 1 by postselecting the chosen computational
    outcome.  Works on pure states and density matrices alike.
    """
    if cluster.n_qubits != 4:
        raise ValueError("lin3 reduction starts from a 4-qubit state")
    if postselect_outcome not in (0, 1):
        raise ValueError(f"postselect outcome must be 0 or 1, got {postselect_outcome}")
    s = permute_qubits(cluster, LIN3_ORDER)
    s = apply_unitary(s, tensor([HADAMARD, HADAMARD]), (1, 4))
    bra = np.zeros(2, dtype=np.complex128)
    bra[postselect_outcome] = 1.0
    reduced, prob = _project_drop_first(s, bra)
    if prob < 1e-12:
        raise ValueError("postselection has zero probability")
    if isinstance(s, StateVector):
        out = StateVector(3, reduced / math.sqrt(prob))
    else:
        out = DensityMatrix(3, reduced / prob)
    return Lin3State(state=out, postselect_prob=prob)


def rotation_target(alpha: float, beta: float) -> StateVector:
    """Ideal output R_x(-beta) R_z(-alpha) |+>."""
    out = apply_unitary(plus_ket(), rotation_gate("z", -alpha), (1,))
    return apply_unitary(out, rotation_gate("x", -beta), (1,))


def _equatorial_bra(angle: float, outcome: int) -> np.ndarray:
    v0, v1 = basis_vectors(MeasurementBasis.equatorial(angle))
    return (v0 if outcome == 0 else v1).conj()


def _enumerate_branches(lin3: DensityMatrix, alpha: float, beta: float, feedforward: bool):
    """Exact (probability, pre-correction state, corrected state) per branch."""
    branches = {}
    for s2 in (0, 1):
        mid, p2 = _project_drop_first_dm(lin3.entries, 3, _equatorial_bra(alpha, s2))
        if p2 < 1e-12:
            continue
        mid = mid / p2
        beta_eff = ((-1) ** s2) * beta if feedforward else beta
        for s3 in (0, 1):
            out, p3 = _project_drop_first_dm(mid, 2, _equatorial_bra(beta_eff, s3))
            prob = p2 * p3
            if prob < 1e-12:
                continue
            out = out / p3
            raw = DensityMatrix(1, out)
            corrected = raw
            if feedforward:
                if s2:
                    corrected = apply_unitary(corrected, PAULI_Z, (1,))
                if s3:
                    corrected = apply_unitary(corrected, PAULI_X, (1,))
            branches[(s2, s3)] = (prob, raw, corrected)
    return branches


def _project_drop_first_dm(entries: np.ndarray, n: int, bra: np.ndarray):
    rest = 2 ** (n - 1)
    block = entries.reshape(2, rest, 2, rest)
    mat = np.einsum("a,abcd,c->bd", bra, block, bra.conj())
    return mat, float(np.real(np.trace(mat)))


def _cluster_for_request(req: RotationRequest) -> DensityMatrix:
    if req.noise is None:
        return prepare_cluster(PreparationParams())
    rho = prepare_cluster(req.noise.prep)
    return apply_storage(rho, req.noise.storage_time, req.noise.storage)


def run_rotation(req: RotationRequest, rng: Optional[RandomSource] = None) -> RotationResult:
    """Run the rotation protocol and return per-branch and corrected outputs.

    Exact mode (shots = 0) enumerates the four (s2, s3) branches with Born
    weights.  Sampled mode draws the branch record multinomially: the branch
    outcomes are the protocol's only stochastic element, so per-shot collapse
    reduces to empirical branch frequencies.  Branch probabilities then report
    the empirical frequencies.
    """
    rho = _cluster_for_request(req)
    lin3 = to_lin3(rho, POSTSELECT_OUTCOME)
    branches = _enumerate_branches(lin3.state, req.alpha, req.beta, req.feedforward_enabled)

    keys = sorted(branches.keys())
    weights = np.array([branches[k][0] for k in keys])
    if req.shots >= 1:
        gen = (rng or RandomSource(0)).generator()
        drawn = gen.multinomial(req.shots, weights / weights.sum())
        weights = drawn / req.shots

    mix = np.zeros((2, 2), dtype=np.complex128)
    outputs = {}
    for k, w in zip(keys, weights):
        prob, raw, corrected = branches[k]
        outputs[k] = BranchOutput(probability=float(w), state=raw)
        mix += w * corrected.entries
    corrected_output = DensityMatrix(1, mix)
    target = rotation_target(req.alpha, req.beta)
    return RotationResult(
        branch_outputs=outputs,
        corrected_output=corrected_output,
        target=target,
        fidelity=fidelity(corrected_output, target),
    )


def single_shot_trace(req: RotationRequest, rng) -> FeedforwardTrace:
    """One sequential shot through the protocol, recording the event order."""
    gen = _as_generator(rng)
    rho = _cluster_for_request(req)
    lin3 = to_lin3(rho, POSTSELECT_OUTCOME).state

    bra_probs = []
    for s2 in (0, 1):
        _, p = _project_drop_first_dm(lin3.entries, 3, _equatorial_bra(req.alpha, s2))
        bra_probs.append(p)
    s2 = 0 if gen.random() < bra_probs[0] / sum(bra_probs) else 1
    mid, p2 = _project_drop_first_dm(lin3.entries, 3, _equatorial_bra(req.alpha, s2))
    mid /= p2

    beta_eff = ((-1) ** s2) * req.beta if req.feedforward_enabled else req.beta
    probs3 = []
    for s3 in (0, 1):
        _, p = _project_drop_first_dm(mid, 2, _equatorial_bra(beta_eff, s3))
        probs3.append(p)
    s3 = 0 if gen.random() < probs3[0] / sum(probs3) else 1

    z_pow = s2 if req.feedforward_enabled else 0
    x_pow = s3 if req.feedforward_enabled else 0
    return FeedforwardTrace(s2=s2, basis_angle_q3=beta_eff, s3=s3, z_power=z_pow, x_power=x_pow)


def branch_verify(alpha: float, beta: float, tol: float = 1e-9):
    """Check each noiseless branch against the rotation identity.

    Measures the ideal lin3 cluster with the FIXED second basis B(beta) and
    compares the pre-correction branch state to

        sigma_x^s3 sigma_z^s2 R_x((-1)^(s2+1) beta) R_z(-alpha) |+>

    up to a global phase.  Returns (all_pass, {(s2, s3): residual}).
    """
    lin3 = to_lin3(cluster_statevector(), POSTSELECT_OUTCOME).state
    amps = lin3.amplitudes
    residuals = {}
    for s2 in (0, 1):
        v2 = _equatorial_bra(alpha, s2) @ amps.reshape(2, 4)
        for s3 in (0, 1):
            v3 = _equatorial_bra(beta, s3) @ v2.reshape(2, 2)
            norm = np.linalg.norm(v3)
            measured = StateVector(1, v3 / norm)
            expected = _branch_formula(alpha, beta, s2, s3)
            residuals[(s2, s3)] = phase_aligned_distance(expected, measured)
    return all(r <= tol for r in residuals.values()), residuals


def _branch_formula(alpha: float, beta: float, s2: int, s3: int) -> StateVector:
    out = apply_unitary(plus_ket(), rotation_gate("z", -alpha), (1,))
    out = apply_unitary(out, rotation_gate("x", ((-1) ** (s2 + 1)) * beta), (1,))
    if s2:
        out = apply_unitary(out, PAULI_Z, (1,))
    if s3:
        out = apply_unitary(out, PAULI_X, (1,))
    return out


@dataclass(frozen=True)
class SweepPoint:
    angle_rad: float
    fidelity: float
    mode: str
    noise_tag: str
    result: RotationResult


SWEEP_MODES = ("rx", "rz")


def sweep(mode: str, template: RotationRequest, step: float = math.pi / 8,
          noise_tag: Optional[str] = None, rng: Optional[RandomSource] = None) -> list:
    """Fidelity of the corrected output across an angle grid.

    ``rx``: alpha fixed at pi/2, beta swept over [0, 2*pi] in ``step``
    increments; ``rz``: beta fixed at 0, alpha swept.  All other request
    fields come from ``template``.
    """
    if mode not in SWEEP_MODES:
        raise ValueError(f"mode must be one of {SWEEP_MODES}, got {mode!r}")
    if noise_tag is None:
        noise_tag = "noiseless" if template.noise is None else "noisy"
    count = int(round(2 * math.pi / step)) + 1
    points = []
    for i in range(count):
        angle = i * step
        if mode == "rx":
            req_i = RotationRequest(alpha=math.pi / 2, beta=angle,
                                    feedforward_enabled=template.feedforward_enabled,
                                    shots=template.shots, noise=template.noise)
        else:
            req_i = RotationRequest(alpha=angle, beta=0.0,
                                    feedforward_enabled=template.feedforward_enabled,
                                    shots=template.shots, noise=template.noise)
        result = run_rotation(req_i, rng)
        points.append(SweepPoint(angle_rad=angle, fidelity=result.fidelity,
                                 mode=mode, noise_tag=noise_tag, result=result))
    return points


def result_to_json_dict(result: RotationResult) -> dict:
    """JSON form with the branch map keyed by the concatenated outcomes 's2s3'."""
    branches = {}
    for (s2, s3), b in sorted(result.branch_outputs.items()):
        m = b.state.entries
        branches[f"{s2}{s3}"] = {
            "probability": b.probability,
            "state": [[i, j, float(m[i, j].real), float(m[i, j].imag)]
                      for i in range(2) for j in range(2)],
        }
    m = result.corrected_output.entries
    return {
        "branches": branches,
        "corrected_output": [[i, j, float(m[i, j].real), float(m[i, j].imag)]
                             for i in range(2) for j in range(2)],
        "target": [[float(a.real), float(a.imag)] for a in result.target.amplitudes],
        "fidelity": result.fidelity,
    }


def sweep_to_csv_rows(points, per_branch: bool = False):
    """(header, rows) for the sweep CSV export."""
    if per_branch:
        header = ["angle_rad", "fidelity", "mode", "noise_tag", "branch_s2", "branch_s3"]
        rows = []
        for p in points:
            rows.append([p.angle_rad, p.fidelity, p.mode, p.noise_tag, "", ""])
            for (s2, s3), b in sorted(p.result.branch_outputs.items()):
                branch_fid = fidelity(b.state, p.result.target)
                rows.append([p.angle_rad, branch_fid, p.mode, p.noise_tag, s2, s3])
        return header, rows
    header = ["angle_rad", "fidelity", "mode", "noise_tag"]
    return header, [[p.angle_rad, p.fidelity, p.mode, p.noise_tag] for p in points]
