"""Command-line front end.

Every subcommand loads validated experiment files, runs one pipeline,
and emits a result record (JSON by default, CSV on request) holding the
computed values, any solver certificates, warnings, and the wall time.
All randomness sits behind ``--seed`` with a fixed default, so a rerun
of any command line reproduces its output.

Exit codes: 0 success, 2 unknown command or bad flags, 3 invalid or
inconsistent input files, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .conic import SolverError
from .discrim import (
    DiscriminationInstrument,
    build_discrimination_from_dual,
    classical_p_succ_ensemble,
    classical_p_succ_product,
    p_succ,
    pauli_twirl_instrument,
)
from .games import (
    CorrelationGame,
    UnitaryFamily,
    average_fidelity,
    build_game_from_dual,
    classical_game_score,
    game_score,
)
from .qobjects import (
    DensityMatrix,
    InputEnsemble,
    Povm,
    TeleportationInstrument,
    bell_povm,
    build_instrument,
    fit_choi,
    ideal_instrument,
    isotropic_state,
    pauli_six,
    realize_from_choi,
)
from .rot import rot_dual, rot_primal
from .serialize import (
    FileFormatError,
    ResultRecord,
    TomographyData,
    certificate_payload,
    encode_object,
    file_digest,
    load_experiment,
    record_dumps,
    save_experiment,
)
from .simorder import (
    ClassicalSimulation,
    QuantumSimulation,
    apply_classical_sim,
    apply_quantum_sim,
    check_monotones,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_SOLVER = 4

_FAMILIES = ("identity_only", "pauli_group", "seesaw_polished")


def _ppt_warnings(d_v, d_b):
    n = d_v * d_b
    if n > 6:
        return [
            "separability is relaxed to the positive-partial-transpose cone, "
            f"exact only for total dimension <= 6; here d_V*d_B = {n}, so "
            "classical sets may be over-approximated and robustness "
            "under-estimated"
        ]
    return []


def _pick(path, cls, what):
    objects = load_experiment(path)
    found = sorted(
        (name, obj) for name, obj in objects.items() if isinstance(obj, cls)
    )
    if len(found) != 1:
        raise FileFormatError(
            str(path), f"expected exactly one {what} object, found {len(found)}"
        )
    return found[0][1]


def _format_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _record_csv(record: ResultRecord) -> str:
    keys = list(record.values)
    head = ",".join(keys)
    row = ",".join(_format_cell(record.values[k]) for k in keys)
    return head + "\n" + row + "\n"


def _emit(record: ResultRecord, args):
    text = _record_csv(record) if args.format == "csv" else record_dumps(record)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tol(args, default):
    return default if args.tol is None else float(args.tol)


def cmd_rot_compute(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    tol = _tol(args, 1e-8)
    p = rot_primal(instr, tol=tol)
    d = rot_dual(instr, tol=tol)
    gap = abs(p.value - d.value)
    if gap > 10.0 * tol:
        raise SolverError(
            f"robustness routes disagree: primal {p.value:.12g} vs dual {d.value:.12g}"
        )
    return ResultRecord(
        command="rot compute",
        inputs={"instrument": file_digest(args.instrument)},
        values={
            "robustness": 0.5 * (p.value + d.value),
            "primal_value": p.value,
            "dual_value": d.value,
            "route_gap": gap,
        },
        certificates={
            "primal": certificate_payload(p.solution),
            "dual": certificate_payload(d.solution),
        },
        warnings=_ppt_warnings(*instr.dims),
    )


def cmd_rot_dual(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    d = rot_dual(instr, tol=_tol(args, 1e-8))
    return ResultRecord(
        command="rot dual",
        inputs={"instrument": file_digest(args.instrument)},
        values={"robustness_lower_bound": d.value},
        certificates={"dual": certificate_payload(d.solution)},
        warnings=_ppt_warnings(*instr.dims),
    )


def cmd_instrument_build(args):
    measurement = _pick(args.measurement, Povm, "POVM")
    state = _pick(args.state, DensityMatrix, "state")
    instr = build_instrument(measurement, state)
    save_experiment(args.save, {"instrument": instr})
    return ResultRecord(
        command="instrument build",
        inputs={
            "measurement": file_digest(args.measurement),
            "state": file_digest(args.state),
        },
        values={"outcomes": instr.outcomes, "d_v": instr.dims[0], "d_b": instr.dims[1]},
    )


def cmd_instrument_ideal(args):
    instr = ideal_instrument(args.d)
    save_experiment(args.save, {"instrument": instr})
    return ResultRecord(
        command="instrument ideal",
        values={"d": args.d, "outcomes": instr.outcomes},
    )


def cmd_instrument_realize(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    state, measurement = realize_from_choi(instr)
    rebuilt = build_instrument(measurement, state)
    residual = max(
        float(np.linalg.norm(a - b)) for a, b in zip(rebuilt.mats, instr.mats)
    )
    save_experiment(args.save, {"state": state, "measurement": measurement})
    return ResultRecord(
        command="instrument realize",
        inputs={"instrument": file_digest(args.instrument)},
        values={"round_trip_residual": residual},
    )


def cmd_instrument_fit(args):
    inputs = _pick(args.inputs, InputEnsemble, "input ensemble")
    data = _pick(args.data, TomographyData, "tomography data")
    instr, residual = fit_choi(inputs, data.data, tol=_tol(args, 1e-4))
    save_experiment(args.save, {"instrument": instr})
    return ResultRecord(
        command="instrument fit",
        inputs={
            "inputs": file_digest(args.inputs),
            "data": file_digest(args.data),
        },
        values={"residual": residual, "outcomes": instr.outcomes},
    )


def cmd_game_build_from_dual(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    dual = rot_dual(instr, tol=_tol(args, 1e-8))
    game = build_game_from_dual(dual)
    save_experiment(args.save, {"game": game})
    return ResultRecord(
        command="game build-from-dual",
        inputs={"instrument": file_digest(args.instrument)},
        values={"dual_value": dual.value, "outcomes": game.outcomes},
        certificates={"dual": certificate_payload(dual.solution)},
        warnings=_ppt_warnings(*instr.dims),
    )


def cmd_game_score(args):
    game = _pick(args.game, CorrelationGame, "game")
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    score = game_score(
        game, instr, UnitaryFamily(args.family), relabelings=args.relabel
    )
    return ResultRecord(
        command="game score",
        inputs={
            "game": file_digest(args.game),
            "instrument": file_digest(args.instrument),
        },
        values={"score": score},
    )


def cmd_game_classical(args):
    game = _pick(args.game, CorrelationGame, "game")
    score = classical_game_score(game, UnitaryFamily(args.family), tol=_tol(args, 1e-9))
    d_out = game.targets[0].shape[0] // game.spectator_dim
    return ResultRecord(
        command="game classical",
        inputs={"game": file_digest(args.game)},
        values={"classical_score": score},
        warnings=_ppt_warnings(game.probe_dim, d_out),
    )


def cmd_discrim_build_from_dual(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    dual = rot_dual(instr, tol=_tol(args, 1e-8))
    e, cons = build_discrimination_from_dual(dual, fictitious=args.fictitious)
    save_experiment(args.save, {"discrimination": e})
    return ResultRecord(
        command="discrim build-from-dual",
        inputs={"instrument": file_digest(args.instrument)},
        values={
            "alpha": cons.alpha,
            "fictitious_count": cons.fictitious_count,
            "branches": e.outcomes,
            "dual_value": dual.value,
        },
        certificates={"dual": certificate_payload(dual.solution)},
        warnings=_ppt_warnings(*instr.dims),
    )


def cmd_discrim_psucc(args):
    e = _pick(args.e, DiscriminationInstrument, "discrimination instrument")
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    return ResultRecord(
        command="discrim psucc",
        inputs={
            "e": file_digest(args.e),
            "instrument": file_digest(args.instrument),
        },
        values={"p_succ": p_succ(e, instr)},
    )


def cmd_discrim_classical(args):
    e = _pick(args.e, DiscriminationInstrument, "discrimination instrument")
    return ResultRecord(
        command="discrim classical",
        inputs={"e": file_digest(args.e)},
        values={
            "ensemble": classical_p_succ_ensemble(e, tol=_tol(args, 1e-9)),
            "product": classical_p_succ_product(e),
        },
        warnings=_ppt_warnings(e.dim, e.dim),
    )


def cmd_discrim_ratio(args):
    e = _pick(args.e, DiscriminationInstrument, "discrimination instrument")
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    denominator = classical_p_succ_ensemble(e, tol=_tol(args, 1e-9))
    if denominator < 1e-12:
        raise ValueError("classical benchmark is degenerate; ratio undefined")
    numerator = p_succ(e, instr)
    return ResultRecord(
        command="discrim ratio",
        inputs={
            "e": file_digest(args.e),
            "instrument": file_digest(args.instrument),
        },
        values={
            "ratio": numerator / denominator,
            "numerator": numerator,
            "denominator": denominator,
        },
        warnings=_ppt_warnings(e.dim, e.dim),
    )


def cmd_sim_apply(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    sim = _pick(args.sim, (ClassicalSimulation, QuantumSimulation), "simulation")
    if isinstance(sim, ClassicalSimulation):
        simmed = apply_classical_sim(instr, sim)
        kind = "classical"
    else:
        simmed = apply_quantum_sim(instr, sim)
        kind = "quantum"
    save_experiment(args.save, {"instrument": simmed})
    return ResultRecord(
        command="sim apply",
        inputs={
            "instrument": file_digest(args.instrument),
            "sim": file_digest(args.sim),
        },
        values={
            "kind": kind,
            "outcomes": simmed.outcomes,
            "d_v": simmed.dims[0],
            "d_b": simmed.dims[1],
        },
    )


def _violation_payload(v):
    recipe = v.recipe
    if isinstance(recipe, (ClassicalSimulation, QuantumSimulation)):
        recipe_obj = encode_object(recipe)
    elif isinstance(recipe, dict):
        recipe_obj = {
            "weight": recipe["weight"],
            "other": encode_object(recipe["other"]),
        }
    else:
        recipe_obj = None
    return {
        "quantity": v.quantity,
        "sim_kind": v.sim_kind,
        "before": v.before,
        "after": v.after,
        "recipe": recipe_obj,
    }


def cmd_sim_check(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    report = check_monotones(
        instr,
        classical_samples=args.classical,
        quantum_samples=args.quantum,
        mixture_samples=args.mixtures,
        seed=args.seed,
        tol=_tol(args, 1e-6),
    )
    return ResultRecord(
        command="sim check",
        inputs={"instrument": file_digest(args.instrument)},
        values={
            "checked": report.checked,
            "violations": len(report.violations),
            "ok": report.ok,
            "seed": args.seed,
        },
        certificates={
            "violations": [_violation_payload(v) for v in report.violations]
        },
        warnings=_ppt_warnings(*instr.dims),
    )


def cmd_fidelity(args):
    instr = _pick(args.instrument, TeleportationInstrument, "instrument")
    inputs_digest = {}
    if args.inputs:
        ensemble = _pick(args.inputs, InputEnsemble, "input ensemble")
        inputs_digest["inputs"] = file_digest(args.inputs)
    else:
        ensemble = pauli_six()
    value = average_fidelity(instr, ensemble, UnitaryFamily(args.family))
    return ResultRecord(
        command="fidelity",
        inputs={"instrument": file_digest(args.instrument), **inputs_digest},
        values={"average_fidelity": value},
    )


def _load_sweep_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise FileFormatError(str(path), f"cannot read file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(str(path), f"not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FileFormatError("$", "expected a JSON object")
    if cfg.get("parameter") != "isotropic_p":
        raise FileFormatError(
            "$.parameter", f"unknown sweep parameter {cfg.get('parameter')!r}"
        )
    if int(cfg.get("d", 2)) != 2:
        raise FileFormatError("$.d", "the isotropic sweep ships qubit fixtures only")
    try:
        start = float(cfg["start"])
        stop = float(cfg["stop"])
        step = float(cfg["step"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError("$", f"malformed grid: {exc}") from exc
    if not (0.0 <= start < stop <= 1.0) or step <= 0.0:
        raise FileFormatError("$", "grid must satisfy 0 <= start < stop <= 1, step > 0")
    n = int(round((stop - start) / step))
    if n < 1 or abs(start + n * step - stop) > 1e-9:
        raise FileFormatError("$.step", "step does not divide the range")
    return [round(float(x), 10) for x in np.linspace(start, stop, n + 1)]


def cmd_sweep(args):
    grid = _load_sweep_config(args.config)
    ideal = ideal_instrument(2)
    game = build_game_from_dual(rot_dual(ideal, tol=_tol(args, 1e-8)))
    twirl = pauli_twirl_instrument(2)
    denominator = classical_p_succ_ensemble(twirl)
    probes = pauli_six()
    family = UnitaryFamily("pauli_group")
    bell = bell_povm(2)

    lines = ["p,robustness,fidelity,game_score,discrimination_ratio"]
    for p in grid:
        instr = build_instrument(bell, isotropic_state(p, 2))
        prim = rot_primal(instr, tol=_tol(args, 1e-8))
        dual = rot_dual(instr, tol=_tol(args, 1e-8))
        t_val = 0.5 * (prim.value + dual.value)
        fid = average_fidelity(instr, probes, family)
        score = game_score(game, instr)
        ratio = p_succ(twirl, instr) / denominator
        cells = [p, t_val, fid, score, ratio]
        lines.append(",".join(f"{c:.17g}" for c in cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return None


def _leaf(p, handler):
    p.add_argument("--tol", type=float, default=None, help="numerical tolerance (command-specific default)")
    p.add_argument("--seed", type=int, default=0, help="seed for any sampled quantity (default 0)")
    p.add_argument("--out", help="write output to this file instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="result record format")
    p.set_defaults(handler=handler)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="telerobust",
        description=(
            "Quantify how far teleportation data sits outside the classical set, "
            "with certificates, games, and discrimination tasks to match."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    rot_p = sub.add_parser("rot", help="teleportation robustness")
    rot_sub = rot_p.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    p = rot_sub.add_parser("compute", help="both solver routes plus certificates")
    p.add_argument("--instrument", required=True, help="experiment file holding the instrument")
    _leaf(p, cmd_rot_compute)
    p = rot_sub.add_parser("dual", help="witness certificate only")
    p.add_argument("--instrument", required=True)
    _leaf(p, cmd_rot_dual)

    in_p = sub.add_parser("instrument", help="construct, fit, or realize instruments")
    in_sub = in_p.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    p = in_sub.add_parser("build", help="instrument of a POVM and a shared state")
    p.add_argument("--measurement", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--save", required=True, help="write the instrument file here")
    _leaf(p, cmd_instrument_build)
    p = in_sub.add_parser("fit", help="least-squares instrument from tomography data")
    p.add_argument("--inputs", required=True, help="probe ensemble file")
    p.add_argument("--data", required=True, help="tomography data file")
    p.add_argument("--save", required=True)
    _leaf(p, cmd_instrument_fit)
    p = in_sub.add_parser("ideal", help="Bell measurement on a maximally entangled pair")
    p.add_argument("--d", type=int, default=2, help="local dimension (default 2)")
    p.add_argument("--save", required=True)
    _leaf(p, cmd_instrument_ideal)
    p = in_sub.add_parser("realize", help="state-and-measurement realization of Choi data")
    p.add_argument("--instrument", required=True)
    p.add_argument("--save", required=True)
    _leaf(p, cmd_instrument_realize)

    game_p = sub.add_parser("game", help="correlation-transfer games")
    game_sub = game_p.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    p = game_sub.add_parser("build-from-dual", help="game whose advantage witnesses the robustness")
    p.add_argument("--instrument", required=True)
    p.add_argument("--save", required=True)
    _leaf(p, cmd_game_build_from_dual)
    p = game_sub.add_parser("score", help="score an instrument on a game")
    p.add_argument("--game", required=True)
    p.add_argument("--instrument", required=True)
    p.add_argument("--family", choices=_FAMILIES, default="identity_only")
    p.add_argument("--relabel", choices=("on", "off"), default="off")
    _leaf(p, cmd_game_score)
    p = game_sub.add_parser("classical", help="best classical score of a game")
    p.add_argument("--game", required=True)
    p.add_argument("--family", choices=_FAMILIES, default="identity_only")
    _leaf(p, cmd_game_classical)

    dis_p = sub.add_parser("discrim", help="subchannel discrimination with side information")
    dis_sub = dis_p.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    p = dis_sub.add_parser("build-from-dual", help="near-optimal discrimination task from a certificate")
    p.add_argument("--instrument", required=True)
    p.add_argument("--fictitious", type=int, default=10_000, help="padding branch count (default 10000)")
    p.add_argument("--save", required=True)
    _leaf(p, cmd_discrim_build_from_dual)
    p = dis_sub.add_parser("psucc", help="guessing probability with an instrument")
    p.add_argument("--e", required=True, help="discrimination instrument file")
    p.add_argument("--instrument", required=True)
    _leaf(p, cmd_discrim_psucc)
    p = dis_sub.add_parser("classical", help="classical benchmarks (ensemble SDP and product form)")
    p.add_argument("--e", required=True)
    _leaf(p, cmd_discrim_classical)
    p = dis_sub.add_parser("ratio", help="quantum-over-classical advantage")
    p.add_argument("--e", required=True)
    p.add_argument("--instrument", required=True)
    _leaf(p, cmd_discrim_ratio)

    sim_p = sub.add_parser("sim", help="simulation recipes and monotone checks")
    sim_sub = sim_p.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    p = sim_sub.add_parser("apply", help="apply a classical or quantum recipe")
    p.add_argument("--instrument", required=True)
    p.add_argument("--sim", required=True, help="file holding the recipe")
    p.add_argument("--save", required=True)
    _leaf(p, cmd_sim_apply)
    p = sim_sub.add_parser("check", help="randomized monotonicity search")
    p.add_argument("--instrument", required=True)
    p.add_argument("--classical", type=int, default=50, help="classical recipes to try")
    p.add_argument("--quantum", type=int, default=20, help="quantum recipes to try")
    p.add_argument("--mixtures", type=int, default=20, help="convex mixtures to try")
    _leaf(p, cmd_sim_check)

    p = sub.add_parser("fidelity", help="average teleportation fidelity over probe states")
    p.add_argument("--instrument", required=True)
    p.add_argument("--inputs", help="probe ensemble file (default: six Pauli eigenstates)")
    p.add_argument("--family", choices=_FAMILIES, default="pauli_group")
    _leaf(p, cmd_fidelity)

    p = sub.add_parser("sweep", help="CSV table over a parameter grid")
    p.add_argument("--config", required=True, help="grid configuration file")
    _leaf(p, cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        record = args.handler(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if record is not None:
        record.wall_time = time.perf_counter() - started
        _emit(record, args)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
