"""Acceptance gate: one test — one pass/fail line — per library guarantee.

Run with ``pytest -v tests/test_acceptance.py`` to get the checklist.
Each test states the guarantee it pins and asserts it at the quoted
tolerance; together they are the contract the rest of the suite refines.
"""

import numpy as np

from telerobust.conic import verify_certificate
from telerobust.discrim import (
    Strategy,
    build_discrimination_from_dual,
    classical_p_succ_ensemble,
    classical_p_succ_product,
    p_succ,
    p_succ_strategy,
    pauli_twirl_instrument,
    rand_discrimination_instrument,
)
from telerobust.games import (
    UnitaryFamily,
    build_game_from_dual,
    classical_game_score,
    fidelity_game_of,
    game_score,
)
from telerobust.linalg import (
    max_entangled,
    max_entangled_ket,
    min_eig,
    partial_trace,
    partial_transpose,
    tensor,
)
from telerobust.qobjects import (
    DensityMatrix,
    TeleportationInstrument,
    bell_povm,
    build_instrument,
    ideal_instrument,
    pauli_six,
    rand_povm,
    rand_state,
    realize_from_choi,
)
from telerobust.rot import (
    robustness_of_entanglement,
    rot_dual,
    rot_max_over_povm,
    rot_primal,
)
from telerobust.simorder import check_monotones


def _product_instrument(rng, outcomes=4):
    shared = DensityMatrix(
        tensor(rand_state((2,), rng=rng).matrix, rand_state((2,), rng=rng).matrix),
        (2, 2),
    )
    return build_instrument(rand_povm((2, 2), outcomes, rng=rng), shared)


def _generic_instrument(rng, outcomes=4):
    return build_instrument(
        rand_povm((2, 2), outcomes, rng=rng), rand_state((2, 2), rng=rng)
    )


def _entangled_instrument(rng):
    return build_instrument(bell_povm(2), rand_state((2, 2), rank=1, rng=rng))


def _rand_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def test_faithfulness_zero_on_product_one_on_ideal():
    """Robustness vanishes on unentangled resources and is 1 for perfect
    qubit teleportation, where hand-built optima pin the solver."""
    rng = np.random.default_rng(100)
    for _ in range(20):
        assert rot_primal(_product_instrument(rng)).value <= 1e-6

    ideal = ideal_instrument(2)
    prim = rot_primal(ideal)
    dual = rot_dual(ideal)
    assert abs(prim.value - 1.0) <= 1e-5
    assert abs(dual.value - 1.0) <= 1e-5

    # hand-built primal point: each block one third of the way to white
    # noise, cap saturated by the identity environment
    bells = bell_povm(2).elements
    f_hand = [b / 6.0 + np.eye(4) / 12.0 for b in bells]
    for f, j in zip(f_hand, ideal.mats):
        assert min_eig(f - j) >= -1e-12
        assert min_eig(partial_transpose(f, (2, 2), 1)) >= -1e-12
    assert np.linalg.norm(2.0 * sum(f_hand) - tensor(np.eye(2), np.eye(2))) <= 1e-12
    hand_primal = float(np.trace(np.eye(2)).real) - 1.0
    assert abs(prim.value - hand_primal) <= 1e-5

    # hand-built dual witnesses: the Bell projectors themselves
    b_hand = np.eye(4) / 2.0
    for a in bells:
        assert min_eig(partial_transpose(b_hand - a, (2, 2), 1)) >= -1e-12
    np.testing.assert_allclose(
        partial_trace(b_hand, (2, 2), keep=(1,)), np.eye(2), atol=1e-12
    )
    hand_dual = 2.0 * sum(
        float(np.vdot(a, j).real) for a, j in zip(bells, ideal.mats)
    ) - 1.0
    assert abs(hand_dual - 1.0) <= 1e-12
    assert abs(dual.value - hand_dual) <= 1e-5


def test_strong_duality_with_verified_certificates():
    """Primal and dual agree to 1e-6 on random qubit instruments and both
    returned certificates re-verify independently."""
    rng = np.random.default_rng(200)
    for k in range(30):
        instr = _generic_instrument(rng, outcomes=3 + k % 2)
        prim = rot_primal(instr)
        dual = rot_dual(instr)
        assert abs(prim.value - dual.value) <= 1e-6
        assert verify_certificate(prim.problem, prim.solution, tol=1e-6).ok
        assert verify_certificate(dual.problem, dual.solution, tol=1e-6).ok


def test_classical_fidelity_threshold():
    """The best classical average fidelity on the six-state 2-design is
    2/(d+1) = 2/3; the ideal instrument reaches 1."""
    game = fidelity_game_of(pauli_six())
    classical = classical_game_score(game, UnitaryFamily("pauli_group"))
    assert abs(classical - 2.0 / 3.0) <= 1e-3
    ideal = game_score(game, ideal_instrument(2), UnitaryFamily("pauli_group"))
    assert abs(ideal - 1.0) <= 1e-9


def test_game_advantage_matches_robustness():
    """The game read off a dual certificate pays d_V * score = 1 + T when
    played straight, beats every classical strategy by 1 + T, and no
    classical strategy exceeds 1/d_V."""
    rng = np.random.default_rng(300)
    for _ in range(10):
        instr = _entangled_instrument(rng)
        dual = rot_dual(instr)
        game = build_game_from_dual(dual)
        score = game_score(game, instr, UnitaryFamily("identity_only"))
        assert abs(2.0 * score - (1.0 + dual.value)) <= 1e-4
        classical = classical_game_score(game, UnitaryFamily("identity_only"))
        assert classical <= 0.5 + 1e-5
        assert score / classical >= (1.0 + dual.value) - 1e-4


def test_discrimination_sandwich_and_floor():
    """No branch family pays more than (1 + T) times the classical
    benchmark, and the family built from a dual certificate with a large
    fictitious padding gets within 1/(alpha N) of that ceiling."""
    rng = np.random.default_rng(400)
    pairs = 20
    fictitious = 10_000
    for k in range(pairs):
        e = rand_discrimination_instrument(2, branches=2 + k % 3, rng=rng)
        instr = _entangled_instrument(rng) if k % 2 else _generic_instrument(rng)
        dual = rot_dual(instr)
        t_val = dual.value

        ratio = p_succ(e, instr) / classical_p_succ_ensemble(e)
        assert ratio <= 1.0 + t_val + 1e-4

        built, cons = build_discrimination_from_dual(dual, fictitious=fictitious)
        floor = (1.0 + t_val) / (1.0 + 1.0 / (cons.alpha * fictitious))
        built_ratio = p_succ(built, instr) / classical_p_succ_ensemble(built)
        assert built_ratio >= floor - 1e-4


def test_worked_example_end_to_end():
    """Ideal qubit teleportation, walked through the whole pipeline: its
    certificate reproduces the Pauli-twirl branches with alpha = 1/2,
    guesses perfectly, and doubles the classical benchmark."""
    ideal = ideal_instrument(2)
    dual = rot_dual(ideal)
    built, cons = build_discrimination_from_dual(dual, fictitious=10)
    assert abs(cons.alpha - 0.5) <= 1e-6

    twirl = pauli_twirl_instrument(2)
    for a, b in zip(built.mats[:4], twirl.mats):
        assert np.linalg.norm(a - b) <= 1e-6
    for pad in built.mats[4:]:
        assert np.linalg.norm(pad) <= 1e-6

    assert abs(p_succ(built, ideal) - 1.0) <= 1e-5
    assert abs(classical_p_succ_ensemble(built) - 0.5) <= 1e-5
    ratio = p_succ(built, ideal) / classical_p_succ_ensemble(built)
    assert abs(ratio - 2.0) <= 1e-4
    assert abs(ratio - (1.0 + dual.value)) <= 1e-4


def test_robustness_link_to_entanglement():
    """Maximizing teleportation robustness over measurements on a Bell
    pair recovers the robustness of entanglement of the state."""
    phi = DensityMatrix(max_entangled(2), (2, 2))
    best, _ = rot_max_over_povm(phi)
    r_e = robustness_of_entanglement(phi)
    assert abs(r_e - 1.0) <= 1e-6
    assert abs(best - r_e) <= 1e-4


def test_monotones_never_increase_under_simulation():
    """Zero violations across 50 classical recipes, 20 quantum recipes,
    and 20 convex mixtures at tolerance 1e-6."""
    rng = np.random.default_rng(800)
    reports = [
        check_monotones(
            ideal_instrument(2),
            classical_samples=25,
            quantum_samples=10,
            mixture_samples=10,
            seed=81,
        ),
        check_monotones(
            _entangled_instrument(rng),
            classical_samples=25,
            quantum_samples=10,
            mixture_samples=10,
            seed=82,
        ),
    ]
    assert sum(r.checked for r in reports) == 50 + 20 + 20
    for report in reports:
        assert report.ok, [v.recipe for v in report.violations]


def test_structural_identities_and_round_trips():
    """Wire-bending identities hold to 1e-11 on random operators, Choi
    data realizes back to a state and measurement to 1e-8, and the
    physical and Choi-side guessing probabilities agree to 1e-10."""
    rng = np.random.default_rng(900)

    # ricochet: sliding an operator across the maximally entangled ket
    for d in (2, 3, 4):
        op = _rand_complex(rng, d)
        ket = max_entangled_ket(d)
        lhs = tensor(np.eye(d), op) @ ket
        rhs = tensor(op.T, np.eye(d)) @ ket
        assert np.abs(lhs - rhs).max() <= 1e-11

    # transfer: projecting one leg onto the entangled pair moves the
    # operator to the other leg, transposed, at cost 1/d
    for d, m in ((2, 2), (2, 3), (3, 2)):
        op = _rand_complex(rng, d * m)
        lhs = partial_trace(
            tensor(max_entangled(d), np.eye(m)) @ tensor(np.eye(d), op),
            (d, d, m),
            keep=(0, 2),
        )
        assert np.abs(lhs - partial_transpose(op, (d, m), 0) / d).max() <= 1e-11

    # snake: threading through two entangled pairs is the identity / d^2
    for a, d in ((2, 2), (3, 2), (2, 3)):
        op = _rand_complex(rng, a * d)
        lhs = partial_trace(
            tensor(np.eye(a), max_entangled(d), np.eye(d)) @ tensor(op, max_entangled(d)),
            (a, d, d, d),
            keep=(0, 3),
        )
        assert np.abs(lhs - op / d**2).max() <= 1e-11

    # realization round trip
    for instr in (
        ideal_instrument(2),
        _generic_instrument(rng),
        _entangled_instrument(rng),
    ):
        state, measurement = realize_from_choi(instr)
        rebuilt = build_instrument(measurement, state)
        assert max(
            float(np.linalg.norm(x - y)) for x, y in zip(rebuilt.mats, instr.mats)
        ) <= 1e-8

    # guessing probability: resource-level formula vs Choi-level formula
    for _ in range(3):
        e = rand_discrimination_instrument(2, branches=3, rng=rng)
        strategy = Strategy(rand_povm((2, 2), 4, rng=rng), rand_state((2, 2), rng=rng))
        physical = p_succ_strategy(e, strategy)
        choi_side = p_succ(e, strategy.instrument())
        assert abs(physical - choi_side) <= 1e-10


def test_twirl_benchmark_regression():
    """Pauli-twirl branches: product-memory benchmark is exactly 1/4 while
    the entangled-memory benchmark doubles it to 1/2.  Whether some
    physically motivated intermediate class closes this factor-two gap
    is, to our knowledge, unresolved; this pins today's numbers."""
    e = pauli_twirl_instrument(2)
    assert abs(classical_p_succ_product(e) - 0.25) <= 1e-12
    assert abs(classical_p_succ_ensemble(e) - 0.5) <= 1e-4
