"""Robustness quantifiers for teleportation instruments and states.

The teleportation robustness T of an instrument {J_a} is the least
amount of extra instrument weight that must be mixed in before the
result can be reproduced without entanglement: the primal program finds
operators F_a, each positive under partial transposition, with

    F_a >= J_a  for every outcome,      d_V * sum_a F_a <= 1 (x) tau,

and minimizes tr(tau) - 1.  Its dual searches for outcome-indexed
witnesses A_a >= 0 together with a normalizing operator B (tr_V B = 1)
such that every B - A_a splits as P + Q^{T_B} with P, Q >= 0, and
maximizes d_V * sum_a tr[A_a J_a] - 1.  Both are solved independently
here and cross-checked; separability is relaxed to the positive partial
transpose, exact for d_V * d_B <= 6.

The same machinery evaluates the robustness of entanglement of a state
and, through an alternating measurement/witness optimization, the
largest teleportation robustness any measurement can extract from a
fixed shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import SdpProblem, SolverError, solve_checked
from .linalg import (
    dagger,
    frobenius_norm,
    herm_eig,
    hermitize,
    max_entangled,
    min_eig,
    partial_trace,
    partial_transpose,
    permute_systems,
    pinv_sqrt,
    tensor,
)
from .qobjects import (
    DensityMatrix,
    Povm,
    TeleportationInstrument,
    bell_povm,
    build_instrument,
    rand_povm,
)

__all__ = [
    "RotPrimalSolution",
    "RotDualSolution",
    "rot_primal",
    "rot_dual",
    "rot",
    "robustness_of_entanglement",
    "rot_max_over_povm",
]


@dataclass
class RotPrimalSolution:
    """Minimal classical cover of an instrument.

    ``classical_ops[a]`` are the PSD, PPT operators F_a dominating the
    instrument outcome-wise, ``tau`` the operator bounding their sum via
    d_V * sum_a F_a <= 1 (x) tau, and ``value`` equals tr(tau) - 1: the
    mixing weight separating the instrument from the classical set.
    ``problem``/``solution`` keep the underlying conic data so the
    certificate can be re-checked with ``verify_certificate``.
    """

    value: float
    classical_ops: list
    tau: np.ndarray
    dims: tuple
    problem: object = field(default=None, repr=False)
    solution: object = field(default=None, repr=False)


@dataclass
class RotDualSolution:
    """Witness certificate lower-bounding the teleportation robustness.

    ``witnesses_A[a]`` are PSD operators on V (x) B, ``B_op`` satisfies
    tr_V B = 1, and ``decompositions[a]`` is the PSD pair (P_a, Q_a)
    with B - A_a = P_a + Q_a^{T_B}, which certifies that the witnessed
    score d_V * sum_a tr[A_a F_a] - 1 is <= 0 on every classical
    instrument.  ``value`` is the score on the instrument itself.
    ``problem``/``solution`` keep the underlying conic data so the
    certificate can be re-checked with ``verify_certificate``.
    """

    value: float
    witnesses_A: list
    B_op: np.ndarray
    decompositions: list
    dims: tuple
    problem: object = field(default=None, repr=False)
    solution: object = field(default=None, repr=False)


def _ensure(ok, msg):
    if not ok:
        raise SolverError(msg)


def rot_primal_problem(instr: TeleportationInstrument):
    """Conic program behind :func:`rot_primal`.

    Deterministic in the instrument, so a stored solution can be
    re-checked later by rebuilding the program and calling
    ``verify_certificate``.  Returns the problem and the block handles
    of the classical operators and of tau.
    """
    d_v, d_b = instr.dims
    n = d_v * d_b
    js = instr.mats
    prob = SdpProblem()
    fs = [prob.add_block(n, cone="ppt", ppt_dims=(d_v, d_b)) for _ in js]
    tau = prob.add_block(d_b)
    gaps = [prob.add_block(n) for _ in js]  # F_a - J_a
    head = prob.add_block(n)  # 1 (x) tau - d_V * sum_a F_a

    prob.set_objective({tau: np.eye(d_b)}, offset=-1.0, sense="min")
    for f, g, j in zip(fs, gaps, js):
        prob.add_operator_equality([(f, 1.0), (g, -1.0)], j)
    terms = [(tau, lambda t: tensor(np.eye(d_v), t))]
    terms += [(f, -float(d_v)) for f in fs]
    terms.append((head, -1.0))
    prob.add_operator_equality(terms, np.zeros((n, n)))
    return prob, fs, tau


def rot_primal(instr: TeleportationInstrument, tol=1e-8) -> RotPrimalSolution:
    """Teleportation robustness by direct minimization.

    Solves min tr(tau) - 1 over PPT operators F_a >= J_a with
    d_V * sum_a F_a <= 1 (x) tau.  The returned operators are checked
    against all constraints before the value is trusted.
    """
    d_v, d_b = instr.dims
    n = d_v * d_b
    js = instr.mats
    prob, fs, tau = rot_primal_problem(instr)

    sol = solve_checked(prob, tol=tol, what="teleportation robustness primal")
    f_ops = [hermitize(sol.primal_blocks[f]) for f in fs]
    tau_op = hermitize(sol.primal_blocks[tau])
    value = float(np.trace(tau_op).real) - 1.0

    chk = max(50.0 * tol, 1e-9)
    for a, (f, j) in enumerate(zip(f_ops, js)):
        _ensure(min_eig(f) >= -chk, f"classical operator {a} not PSD")
        _ensure(
            min_eig(partial_transpose(f, (d_v, d_b), 1)) >= -chk,
            f"classical operator {a} not PPT",
        )
        _ensure(min_eig(f - j) >= -chk, f"classical operator {a} does not dominate outcome")
    cap = tensor(np.eye(d_v), tau_op) - d_v * sum(f_ops)
    _ensure(min_eig(cap) >= -chk, "classical operators exceed the 1 (x) tau cap")
    _ensure(value >= -chk, f"negative robustness {value:.3e}")
    return RotPrimalSolution(value, f_ops, tau_op, instr.dims, problem=prob, solution=sol)


def rot_dual_problem(instr: TeleportationInstrument):
    """Conic program behind :func:`rot_dual`.

    Deterministic in the instrument (see :func:`rot_primal_problem`).
    Returns the problem and the block handles of the witnesses, the
    normalizer, and the decomposition pairs.
    """
    d_v, d_b = instr.dims
    n = d_v * d_b
    js = instr.mats
    prob = SdpProblem()
    a_blocks = [prob.add_block(n) for _ in js]
    b_block = prob.add_block(n)
    p_blocks = [prob.add_block(n) for _ in js]
    q_blocks = [prob.add_block(n) for _ in js]

    prob.set_objective(
        {a: float(d_v) * j for a, j in zip(a_blocks, js)}, offset=-1.0, sense="max"
    )

    def pt_neg(q):
        return -partial_transpose(q, (d_v, d_b), 1)

    for a, p, q in zip(a_blocks, p_blocks, q_blocks):
        prob.add_operator_equality(
            [(b_block, 1.0), (a, -1.0), (p, -1.0), (q, pt_neg)], np.zeros((n, n))
        )
    prob.add_operator_equality(
        [(b_block, lambda m: partial_trace(m, (d_v, d_b), keep=(1,)))], np.eye(d_b)
    )
    return prob, a_blocks, b_block, p_blocks, q_blocks


def rot_dual(instr: TeleportationInstrument, tol=1e-8) -> RotDualSolution:
    """Teleportation robustness by witness maximization.

    Solves max d_V * sum_a tr[A_a J_a] - 1 over PSD witnesses A_a and a
    PSD B with tr_V B = 1 such that each B - A_a decomposes as
    P_a + Q_a^{T_B}.  The decompositions are returned so the certificate
    can be re-verified without touching the solver.
    """
    d_v, d_b = instr.dims
    n = d_v * d_b
    js = instr.mats
    prob, a_blocks, b_block, p_blocks, q_blocks = rot_dual_problem(instr)

    sol = solve_checked(prob, tol=tol, what="teleportation robustness dual")
    a_ops = [hermitize(sol.primal_blocks[a]) for a in a_blocks]
    b_op = hermitize(sol.primal_blocks[b_block])
    pairs = [
        (hermitize(sol.primal_blocks[p]), hermitize(sol.primal_blocks[q]))
        for p, q in zip(p_blocks, q_blocks)
    ]
    value = d_v * float(sum(np.vdot(a, j).real for a, j in zip(a_ops, js))) - 1.0

    chk = max(50.0 * tol, 1e-9)
    _ensure(min_eig(b_op) >= -chk, "normalizer B not PSD")
    _ensure(
        frobenius_norm(partial_trace(b_op, (d_v, d_b), keep=(1,)) - np.eye(d_b)) <= chk * n,
        "tr_V B deviates from the identity",
    )
    for a, (a_op, (p, q)) in enumerate(zip(a_ops, pairs)):
        _ensure(min_eig(a_op) >= -chk, f"witness {a} not PSD")
        _ensure(min_eig(p) >= -chk and min_eig(q) >= -chk, f"decomposition pair {a} not PSD")
        resid = b_op - a_op - p - partial_transpose(q, (d_v, d_b), 1)
        _ensure(
            frobenius_norm(resid) <= chk * n, f"witness {a} decomposition identity violated"
        )
    return RotDualSolution(value, a_ops, b_op, pairs, instr.dims, problem=prob, solution=sol)


def rot(instr: TeleportationInstrument, tol=1e-8) -> float:
    """Cross-validated teleportation robustness.

    Runs the minimization and the witness maximization independently and
    returns their midpoint; disagreement beyond 10 * tol is an error
    rather than a silently wrong number.
    """
    p = rot_primal(instr, tol=tol)
    d = rot_dual(instr, tol=tol)
    gap = abs(p.value - d.value)
    if gap > 10.0 * tol:
        raise SolverError(
            f"robustness routes disagree: primal {p.value:.12g} vs dual {d.value:.12g} "
            f"(|gap| = {gap:.3e} > {10.0 * tol:.3e})"
        )
    return 0.5 * (p.value + d.value)


def robustness_of_entanglement(rho: DensityMatrix, tol=1e-8) -> float:
    """Generalized robustness of entanglement, min{r >= 0 : rho <= (1+r) sigma}.

    The separable set is relaxed to states with positive partial
    transpose (exact for total dimension <= 6), making the quantity the
    value of min tr(sigma_tilde) - 1 over PPT sigma_tilde >= rho.
    """
    if len(rho.dims) != 2:
        raise ValueError("robustness of entanglement needs a bipartite state")
    d1, d2 = rho.dims
    n = d1 * d2
    prob = SdpProblem()
    sig = prob.add_block(n, cone="ppt", ppt_dims=(d1, d2))
    slack = prob.add_block(n)
    prob.set_objective({sig: np.eye(n)}, offset=-1.0, sense="min")
    prob.add_operator_equality([(sig, 1.0), (slack, -1.0)], rho.matrix)
    sol = solve_checked(prob, tol=tol, what="entanglement robustness")
    return float(sol.primal_value)


def _clip_psd(x):
    vals, vecs = herm_eig(x, tol=1e-8)
    return (vecs * np.clip(vals, 0.0, None)) @ dagger(vecs)


def _witness_pullbacks(rho, witnesses):
    """Operators K_a on V' (x) A with tr[A_a J_a(M)] = tr[M_a K_a].

    The instrument built from a measurement M on V' (x) A and the shared
    state is linear in M, so each witness pulls back through the
    construction to a fixed coefficient operator.
    """
    d_a, d_b = rho.dims
    d_v = d_a
    base = tensor(max_entangled(d_v), rho.matrix)  # order V, V', A, B
    eye_m = np.eye(d_v * d_a)
    ks = []
    for a_op in witnesses:
        emb = permute_systems(
            tensor(a_op, eye_m), (d_v, d_b, d_v, d_a), (0, 2, 3, 1)
        )
        ks.append(hermitize(partial_trace(base @ emb, (d_v, d_v, d_a, d_b), keep=(1, 2))))
    return ks


def _best_povm_for_witnesses(rho, witnesses, tol):
    """Measurement maximizing the witnessed score for fixed witnesses.

    max_M d_V * sum_a tr[A_a J_a(M)] - 1 is a semidefinite program in the
    measurement operators because the instrument is linear in them.
    """
    d_a, _ = rho.dims
    d_v = d_a
    n = d_v * d_a
    ks = _witness_pullbacks(rho, witnesses)
    prob = SdpProblem()
    ms = [prob.add_block(n) for _ in ks]
    prob.set_objective(
        {m: float(d_v) * k for m, k in zip(ms, ks)}, offset=-1.0, sense="max"
    )
    prob.add_operator_equality([(m, 1.0) for m in ms], np.eye(n))
    sol = solve_checked(prob, tol=tol, what="measurement update")
    elems = [_clip_psd(sol.primal_blocks[m]) for m in ms]
    scale = pinv_sqrt(sum(elems))
    return Povm([hermitize(scale @ e @ scale) for e in elems], (d_v, d_a))


def _seesaw_over_povm(rho, povm, rounds, tol, step_tol):
    """Alternate witness re-fits and measurement updates from one start.

    Returns (best value, measurement attaining it, value history).  Each
    measurement update maximizes the previous witnesses' score and the
    following witness re-fit can only improve on that, so the history
    must be non-decreasing; a drop beyond ``step_tol`` is a solver
    failure and aborts.
    """
    history = []
    best_val, best_povm = -np.inf, povm
    for r in range(rounds):
        dual = rot_dual(build_instrument(povm, rho), tol=tol)
        history.append(dual.value)
        if len(history) > 1 and history[-1] < history[-2] - step_tol:
            raise SolverError(
                f"alternation decreased from {history[-2]:.12g} to {history[-1]:.12g} "
                f"at round {r}; values {history}"
            )
        if dual.value > best_val:
            best_val, best_povm = dual.value, povm
        if r == rounds - 1:
            break
        povm = _best_povm_for_witnesses(rho, dual.witnesses_A, tol)
    return best_val, best_povm, history


def rot_max_over_povm(rho: DensityMatrix, rounds=5, seed=0, tol=1e-10, restarts=3):
    """Largest teleportation robustness any measurement extracts from rho.

    Alternates between re-fitting witnesses for the current measurement
    (the dual program) and re-optimizing the measurement for the current
    witnesses (also semidefinite), from a generalized Bell measurement
    plus ``restarts`` random measurements.  Returns (value, measurement)
    for the best round seen — a certified lower bound on the maximum,
    which never exceeds the robustness of entanglement of rho.

    The default tolerance is tighter than elsewhere so that solver noise
    stays well below the per-step monotonicity budget of the alternation.
    """
    d_a, _ = rho.dims
    rng = np.random.default_rng(seed)
    starts = [bell_povm(d_a)]
    starts += [rand_povm((d_a, d_a), d_a * d_a, rng) for _ in range(restarts)]
    best_val, best_povm = -np.inf, None
    for m0 in starts:
        val, povm, _ = _seesaw_over_povm(rho, m0, rounds, tol, step_tol=1e-7)
        if val > best_val:
            best_val, best_povm = val, povm
    return best_val, best_povm
