"""Command line front end.

Exit codes: 0 all verdicts hold, 1 an inclusion is violated, 2 invalid input.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from .gabor import (
    ClosedFormSTFT,
    GaussianWindow,
    SampledField,
    SampledSTFT,
    hermite_function,
    seminorm_derivatives,
    seminorm_stft,
    seminorm_sup,
)
from .oscillatory import (
    InvalidPhase,
    QuadraticPhase,
    RouteMismatchError,
    lagrangian_of_phase,
    predict_wf_oscillatory,
    real_points,
    reduce_canonical,
    validate_phase,
)
from .propagator import CausticError, EngineSelectionError, propagate, sample_state
from .scenario import (
    ScenarioError,
    describe_initial,
    load_scenario,
    parse_radii,
    save_field,
    write_csv,
    write_json,
    write_profiles_csv,
)
from .states import Delta, GaussianChirpState
from .subspaces import ConeSet
from .symplectic import InvalidHamiltonian, hamilton_map, kernel_imag, predict_wf_propagated, singular_space
from .wavefront import check_inclusion, estimate_wf

EXIT_OK, EXIT_VIOLATED, EXIT_INVALID = 0, 1, 2


def _add_common(p: argparse.ArgumentParser, scenario_required: bool = True) -> None:
    p.add_argument("--scenario", required=scenario_required, help="scenario JSON file")
    p.add_argument("--out", default="out", help="output directory (created if missing)")
    p.add_argument("--figures", action="store_true", help="also write PNG figures next to the reports")


def _add_estimator(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dirs", type=int, help="number of phase-space directions")
    p.add_argument("--radii", type=parse_radii, help="radius window r1:r2:k (log-spaced)")
    p.add_argument("--s", type=float, help="Gelfand-Shilov index s > 1/2")
    p.add_argument("--amin", type=float, help="decay-rate threshold A_min")
    p.add_argument("--kappa-tol", type=float, help="Gaussian-rate threshold for singular directions")
    p.add_argument("--angular-tol", type=float, help="inclusion tolerance in degrees")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfprop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="exact singular space and propagated cones per time")
    _add_common(p)

    p = sub.add_parser("simulate", help="propagate the initial data and dump fields")
    _add_common(p)
    p.add_argument("--engine", choices=["auto", "gaussian", "splitstep", "metaplectic"])

    p = sub.add_parser("estimate", help="estimate the wave front set of the initial data")
    _add_common(p)
    _add_estimator(p)

    p = sub.add_parser("verify", help="propagate, estimate and check the predicted inclusion")
    _add_common(p)
    _add_estimator(p)
    p.add_argument("--engine", choices=["auto", "gaussian", "splitstep", "metaplectic"])

    p = sub.add_parser("oscillatory", help="wave front prediction for a quadratic-phase oscillatory integral")
    p.add_argument("--phase", required=True, help="phase JSON file")
    p.add_argument("--out", default="out")
    p.add_argument("--figures", action="store_true")

    p = sub.add_parser("seminorms", help="the three seminorm families (Hermite suite without --scenario)")
    _add_common(p, scenario_required=False)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--A", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    p.add_argument("--beta-max", type=int, default=8)
    p.add_argument("--R", type=float, default=8.0)
    return parser


def _apply_overrides(sc, args) -> None:
    est = sc.estimator
    for attr, name in (("n_dirs", "dirs"), ("radii", "radii"), ("s", "s"), ("A_min", "amin"),
                       ("kappa_tol", "kappa_tol"), ("angular_tol", "angular_tol")):
        val = getattr(args, name, None)
        if val is not None:
            setattr(est, attr, val)
    est.validate()
    if getattr(args, "engine", None):
        sc.engine = args.engine


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _evaluator(state):
    if isinstance(state, SampledField):
        return SampledSTFT(state)
    return ClosedFormSTFT(state)


# -- subcommands ----------------------------------------------------------------

def cmd_predict(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.initial_cone is None:
        raise ScenarioError("predict needs an exact initial cone (library data or initial.cone)")
    F = hamilton_map(sc.H)
    S = singular_space(F)
    per_t = []
    for t in sc.times:
        if t == 0:
            rec = {"t": 0.0, "ker_im_T": kernel_imag(np.eye(2 * sc.d)).to_json(),
                   "sharp": sc.initial_cone.to_json(), "coarse": sc.initial_cone.to_json()}
        else:
            pred = predict_wf_propagated(F, t, sc.initial_cone)
            rec = {"t": t, "ker_im_T": pred.ker_im_T.to_json(), "sharp": pred.sharp.to_json(),
                   "coarse": pred.coarse.to_json()}
        per_t.append(rec)
    out = _out_dir(args)
    write_json(out / "predict.json", {"command": "predict", "Q": sc.H.to_json(), "S": S.to_json(),
                                      "initial_cone": sc.initial_cone.to_json(), "predictions": per_t})
    if args.figures and sc.d == 1:
        from .plotting import plot_cones
        for k, rec in enumerate(per_t):
            plot_cones({"sharp": ConeSet.from_json(rec["sharp"]), "coarse": ConeSet.from_json(rec["coarse"])},
                       out / f"predict_t{k}.png", title=f"t = {rec['t']:g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    _apply_overrides(sc, args)
    if sc.initial is None:
        raise ScenarioError("simulate needs initial data, not just a cone")
    out = _out_dir(args)
    records = []
    for k, t in enumerate(sc.times):
        res = propagate(sc.initial, sc.H, t, sc.engine, sc.L, sc.n)
        state = res.state
        field = state if isinstance(state, SampledField) else sample_state(state, sc.L, sc.n)
        rec = {"t": t, "engine": res.engine, "diagnostics": {k2: v for k2, v in res.diagnostics.items() if k2 != "norms"}}
        if "norms" in res.diagnostics:
            norms = np.asarray(res.diagnostics["norms"])
            rec["norm_first"], rec["norm_last"] = float(norms[0]), float(norms[-1])
            rec["max_norm_increase"] = float(np.max(np.diff(norms), initial=0.0))
        if isinstance(state, GaussianChirpState):
            rec["state"] = state.to_json()
        if field is not None:
            rec["field"] = save_field(field, out / f"field_t{k}.json").name
            rec["grid_l2_norm"] = field.l2_norm()
            if args.figures:
                from .plotting import plot_field
                plot_field(field, out / f"field_t{k}.png", title=f"t = {t:g} ({res.engine})")
        records.append(rec)
    note = None
    if isinstance(sc.initial, Delta):
        note = "delta initial data realized as a unit-mass Gaussian of width 4 grid steps"
    write_json(out / "simulate.json", {"command": "simulate", "Q": sc.H.to_json(),
                                       "initial": describe_initial(sc.initial), "results": records,
                                       "note": note})
    return EXIT_OK


def _estimate(state, est_params):
    return estimate_wf(_evaluator(state), s=est_params.s, n_dirs=est_params.n_dirs,
                       radii=est_params.radii_array(), A_min=est_params.A_min, kappa_tol=est_params.kappa_tol)


def cmd_estimate(args) -> int:
    sc = load_scenario(args.scenario)
    _apply_overrides(sc, args)
    if sc.initial is None:
        raise ScenarioError("estimate needs initial data")
    est = _estimate(sc.initial, sc.estimator)
    out = _out_dir(args)
    write_profiles_csv(out / "profiles.csv", est)
    report = {"command": "estimate", "initial": describe_initial(sc.initial), "params": est.params,
              "singular_directions": est.directions.tolist()}
    if sc.initial_cone is not None:
        rep = check_inclusion(est, sc.initial_cone, sc.estimator.angular_tol)
        report["comparison_with_exact"] = rep.to_json()
    write_json(out / "estimate.json", report)
    if args.figures and sc.d == 1:
        from .plotting import plot_decay_rates
        plot_decay_rates(est, out / "profiles.png", sc.initial_cone)
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = load_scenario(args.scenario)
    _apply_overrides(sc, args)
    if sc.initial is None or sc.initial_cone is None:
        raise ScenarioError("verify needs initial data with a known exact cone")
    F = hamilton_map(sc.H)
    out = _out_dir(args)
    items, all_hold = [], True
    for k, t in enumerate(sc.times):
        if t == 0:
            sharp = coarse = sc.initial_cone
            state, engine = sc.initial, "none"
        else:
            pred = predict_wf_propagated(F, t, sc.initial_cone)
            sharp, coarse = pred.sharp, pred.coarse
            res = propagate(sc.initial, sc.H, t, sc.engine, sc.L, sc.n)
            state, engine = res.state, res.engine
        est = _estimate(state, sc.estimator)
        rep = check_inclusion(est, sharp, sc.estimator.angular_tol, coarse=coarse)
        all_hold &= rep.holds
        prof = write_profiles_csv(out / f"profiles_t{k}.csv", est)
        items.append({"t": t, "engine": engine, "profiles_csv": prof.name, **rep.to_json()})
        if args.figures and sc.d == 1:
            from .plotting import plot_decay_rates
            plot_decay_rates(est, out / f"profiles_t{k}.png", sharp, title=f"t = {t:g}")
    report = {"command": "verify", "Q": sc.H.to_json(), "initial": describe_initial(sc.initial),
              "verdict": "holds" if all_hold else "fails", "items": items}
    if isinstance(sc.initial, Delta):
        report["note"] = ("delta initial data propagated as a unit-mass Gaussian of width 4 grid steps; "
                          "predictions use the exact delta cone")
    write_json(out / "verify.json", report)
    return EXIT_OK if all_hold else EXIT_VIOLATED


def cmd_oscillatory(args) -> int:
    import json
    try:
        obj = json.loads(Path(args.phase).read_text(encoding="utf-8"))
        P = QuadraticPhase.from_json(obj)
    except (OSError, KeyError, ValueError) as exc:
        raise ScenarioError(f"cannot read phase {args.phase}: {exc}") from exc
    out = _out_dir(args)
    diag = validate_phase(P)
    report = {"command": "oscillatory", "phase": P.to_json(), "diagnostics": diag.to_json()}
    if not diag.ok:
        report["error"] = "phase violates Im P >= 0 or the rank condition"
        write_json(out / "oscillatory.json", report)
        print(f"invalid phase: Im P min eigenvalue {diag.im_min_eig:.3e}, rank margin {diag.rank_margin:.3e}",
              file=sys.stderr)
        return EXIT_INVALID
    cone = predict_wf_oscillatory(P)
    canon = reduce_canonical(P)
    direct = ConeSet.of(2 * P.d, [real_points(lagrangian_of_phase(P))])
    report.update({
        "canonical": {"R_re": canon.R.real.tolist(), "R_im": canon.R.imag.tolist(), "L": canon.L.tolist(),
                      "passes": canon.passes},
        "prediction": cone.to_json(),
        "direct_route": direct.to_json(),
        "route_angle": cone.max_mismatch_angle(direct) if not cone.is_empty else 0.0,
    })
    write_json(out / "oscillatory.json", report)
    if args.figures and P.d == 1:
        from .plotting import plot_cones
        plot_cones({"prediction": cone}, out / "oscillatory.png")
    return EXIT_OK


def _hermite_suite(L=16.0, n=4096):
    return {f"h{k}": SampledField.from_function(lambda x, k=k: hermite_function(k, x), 1, L, n) for k in range(5)}


def cmd_seminorms(args) -> int:
    if args.scenario:
        sc = load_scenario(args.scenario)
        if sc.initial is None:
            raise ScenarioError("seminorms needs initial data")
        u = sc.initial
        if isinstance(u, SampledField):
            fields = {"initial": (u, u)}
        elif isinstance(u, GaussianChirpState):
            fields = {"initial": (sample_state(u, sc.L, sc.n), u)}
        else:
            fields = {"initial": (None, u)}
    else:
        fields = {k: (f, f) for k, f in _hermite_suite().items()}
    rows, records = [], []
    for name, (field, stft_src) in fields.items():
        for A in args.A:
            fams = {}
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                if field is not None:
                    vals = field.values
                    if field.d == 1:
                        ax = field.axis
                        fams["sup"] = seminorm_sup(lambda x: np.interp(x, ax, np.abs(vals)), A, args.s, args.R)
                    fams["derivatives"] = seminorm_derivatives(field, A, args.s, args.beta_max)
                fams["stft"] = seminorm_stft(stft_src, A, args.s, GaussianWindow(stft_src.d), args.R)
            for fam, r in fams.items():
                rec = {"function": name, "family": fam, "A": A, "s": args.s, "value": r.value,
                       "divergent": r.divergent, "on_boundary": r.on_boundary,
                       "beta": list(r.beta) if r.beta is not None else None,
                       "truncation_suspect": r.truncation_suspect,
                       "witness": r.witness.tolist() if r.witness is not None else None}
                records.append(rec)
                rows.append([name, fam, A, args.s, r.value, int(r.divergent), int(r.on_boundary),
                             sum(r.beta) if r.beta else -1, int(r.truncation_suspect)])
            for w in caught:
                records.append({"function": name, "A": A, "warning": str(w.message)})
    out = _out_dir(args)
    write_csv(out / "seminorms.csv",
              ["function", "family", "A", "s", "value", "divergent", "on_boundary", "beta_order", "truncation_suspect"],
              rows)
    write_json(out / "seminorms.json", {"command": "seminorms", "results": records})
    return EXIT_OK


COMMANDS = {
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "oscillatory": cmd_oscillatory,
    "seminorms": cmd_seminorms,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EngineSelectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ScenarioError, InvalidHamiltonian, InvalidPhase, CausticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RouteMismatchError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
