"""Batch command line: fits, spectra, quantum defects, phase shifts and TDCS curves.

Every run writes ``manifest.ini`` next to its outputs. The manifest is a
valid ``--config`` file holding every resolved setting, so

    qdwba --config out/manifest.ini --out-dir again tdcs

repeats the run and reproduces the CSV files byte for byte.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .units import ev_to_ry, ry_to_ev

log = logging.getLogger("qdwba")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
FLOAT = "{:.10e}"
GLOBAL_KEYS = ("threads", "plot")


class InputError(Exception):
    """Bad user input: unreadable files, malformed lists, refused settings."""


# -- small parsers ----------------------------------------------------------------

def _floats(text: str, name: str, n: Optional[int] = None) -> List[float]:
    try:
        vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise InputError(f"{name}: expected {n} values, got {len(vals)}")
    return vals


def _ints(text: str, name: str) -> List[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated integers, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise InputError(f"not a boolean: {text!r}")


def _fmt(x: float) -> str:
    return FLOAT.format(float(x))


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


# -- argument parser --------------------------------------------------------------

def _add_solver(p):
    p.add_argument("--integrator", choices=("adaptive", "rk4"), default="adaptive")
    p.add_argument("--eps-local", type=float, default=1e-10, help="adaptive local tolerance")
    p.add_argument("--h", type=float, default=0.02, help="RK4 step")
    p.add_argument("--r0", type=float, default=1.0, help="CFM matching radius (Bohr)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdwba", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="key = value settings file with [section] headers")
    ap.add_argument("--out-dir", default=".", help="output directory (created if missing)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for radial tables")
    ap.add_argument("--plot", action="store_true", help="also render PNG figures")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("optimize", help="fit GSZ parameters to a level file")
    p.add_argument("--levels", help="level file (unit=, l=, n_start= headers; 'n E' rows)")
    p.add_argument("--strategy", choices=("low_plus_average", "two_high", "low_and_high"),
                   default="low_plus_average")
    p.add_argument("--n1", type=int, help="first label of the strategy")
    p.add_argument("--n2", type=int, help="second label")
    p.add_argument("--n3", type=int, help="end of the averaging range (low_plus_average)")
    p.add_argument("--p0", default="3.0,1.0", help="starting eps1,eps2")
    p.add_argument("--residual-space", choices=("quantum_defect", "energy"),
                   default="quantum_defect")
    p.add_argument("--z-nuclear", type=int, default=18)
    p.add_argument("--stage1-tol", type=float, default=1e-5)
    p.add_argument("--stage2-tol", type=float, default=1e-7)
    p.add_argument("--stage1-h", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=50)
    _add_solver(p)

    p = sub.add_parser("levels", help="bound spectrum of a GSZ potential")
    p.add_argument("--eps1", type=float, default=3.625)
    p.add_argument("--eps2", type=float, default=1.036)
    p.add_argument("--z-nuclear", type=int, default=18)
    p.add_argument("--z-residual", type=float, default=1.0)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--window", default="-1.5,-0.004", help="energy window lo,hi (Ry)")
    p.add_argument("--n-scan", type=int, default=400)
    _add_solver(p)

    p = sub.add_parser("qd", help="quantum defects of a level file, optionally against a model")
    p.add_argument("--levels", help="level file")
    p.add_argument("--eps1", type=float)
    p.add_argument("--eps2", type=float)
    p.add_argument("--z-nuclear", type=int, default=18)
    _add_solver(p)

    p = sub.add_parser("phase", help="elastic phase shifts")
    p.add_argument("--model", default="fm",
                   choices=("fm", "fitted-entrance", "gsz", "coulomb", "square-well"))
    p.add_argument("--l", default="0,1,2", help="partial waves")
    p.add_argument("--energies", default="1,2,5,10,20,30", help="energies (eV)")
    p.add_argument("--eps1", type=float, default=3.625)
    p.add_argument("--eps2", type=float, default=1.036)
    p.add_argument("--z-residual", type=float, default=1.0)
    p.add_argument("--alpha-d", type=float, default=11.08, help="dipole polarizability (Bohr^3)")
    p.add_argument("--r-cut", type=float, default=1.0)
    p.add_argument("--charge", type=float, default=1.0, help="Coulomb charge")
    p.add_argument("--depth", type=float, default=4.0, help="square-well depth (Ry)")
    p.add_argument("--radius", type=float, default=1.0, help="square-well radius (Bohr)")
    p.add_argument("--fit", help="phase-shift targets 'l E_eV delta_rad' to fit eps1, eps2 "
                                 "of the fitted-entrance model to")
    p.add_argument("--reference", help="reference phase shifts 'l E_eV delta_rad'")
    p.add_argument("--fit-limit", type=float, default=30.0, help="eV; fitted-entrance cap")
    _add_solver(p)

    p = sub.add_parser("tdcs", help="equal-sharing (e,2e) TDCS curves")
    p.add_argument("--e-exc", default="2", help="excess energies (eV)")
    p.add_argument("--models", default="dwba_fm,dwba_pseudo")
    p.add_argument("--l-max", type=int, help="partial-wave cap (default 25 up to 4 eV, 40 above)")
    p.add_argument("--lambda-max", type=int, default=6)
    p.add_argument("--theta-step", type=float, default=5.0, help="angle grid step (deg)")
    p.add_argument("--z-eff", type=float, default=0.75)
    p.add_argument("--ionization-potential", type=float, default=15.8, help="eV")
    p.add_argument("--entrance-fit", help="eps1,eps2,alpha_d,r_cut of the fitted entrance")
    p.add_argument("--entrance-switch", type=float, default=30.0,
                   help="incident energy (eV) above which the entrance is Furness-McCarthy")
    p.add_argument("--entrance-polarization", type=float, default=0.0,
                   help="alpha_d added to the Furness-McCarthy entrance")
    p.add_argument("--exit-exchange", default="false",
                   help="add Furness-McCarthy exchange to the GSZ exit potential")
    p.add_argument("--one-body", default="false", help="add the one-body distortion term")
    p.add_argument("--r-max", type=float, help="outer radius of the radial integrals (Bohr)")
    p.add_argument("--dx", type=float, default=0.05)
    p.add_argument("--experiment", help="'theta_deg value [error]' rows to overlay")
    p.add_argument("--overlay-model", default="dwba_pseudo")
    p.add_argument("--normalize-at", type=float, default=270.0)
    return ap


def _subparser(ap: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in ap._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _settings(p: argparse.ArgumentParser) -> Dict[str, argparse.Action]:
    return {a.dest: a for a in p._actions
            if a.dest not in ("help", "version", argparse.SUPPRESS)}


def _apply_config(ap, args_ns, argv):
    """Merge ``--config`` values under the command-line flags."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(args_ns.config) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {args_ns.config}: {exc}") from None
    except configparser.Error as exc:
        raise InputError(f"malformed config {args_ns.config}: {exc}") from None
    for section in cp.sections():
        if section == "global":
            target = ap
            allowed = {k: a for k, a in _settings(ap).items() if k in GLOBAL_KEYS}
        elif section in ("optimize", "levels", "qd", "phase", "tdcs"):
            target = _subparser(ap, section)
            allowed = _settings(target)
        else:
            raise InputError(f"config: unknown section [{section}]")
        defaults = {}
        for key, raw in cp.items(section):
            dest = key.replace("-", "_")
            if dest not in allowed:
                raise InputError(f"config [{section}]: unknown key {key!r}")
            action = allowed[dest]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = _bool(raw)
            elif raw == "":
                defaults[dest] = None
            elif action.type is not None:
                try:
                    defaults[dest] = action.type(raw)
                except ValueError:
                    raise InputError(f"config [{section}]: bad value for {key}: {raw!r}") from None
            else:
                defaults[dest] = raw
            if action.choices is not None and defaults[dest] not in action.choices:
                raise InputError(f"config [{section}]: {key} must be one of {list(action.choices)}")
        target.set_defaults(**defaults)
    return ap.parse_args(argv)


def write_manifest(out: Path, args) -> Path:
    """All resolved settings of the run, in ``--config`` format."""
    cp = configparser.ConfigParser(interpolation=None)
    cp["global"] = {k: str(getattr(args, k)).lower() if isinstance(getattr(args, k), bool)
                    else str(getattr(args, k)) for k in GLOBAL_KEYS}
    skip = {"config", "out_dir", "verbose", "command", *GLOBAL_KEYS}
    sec = {}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(val, float):
            val = repr(val)
        sec[key.replace("_", "-")] = "" if val is None else str(val)
    cp[args.command] = sec
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.ini"
    with open(path, "w") as fh:
        fh.write(f"# qdwba {__version__} {args.command}\n")
        cp.write(fh)
    return path


def _solver(args, **over):
    from .cfm import SolverConfig
    kw = dict(r0=args.r0, integrator=args.integrator, h=args.h, eps_local=args.eps_local)
    kw.update(over)
    return SolverConfig(**kw)


# -- subcommands ------------------------------------------------------------------

def _read_series(path):
    from .qdefect import LevelTableError, parse_level_table
    if not path:
        raise InputError("--levels is required")
    try:
        return parse_level_table(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except LevelTableError as exc:
        raise InputError(str(exc)) from None


def cmd_optimize(args, out: Path) -> int:
    from .optimizer import (ObjectiveSpec, Strategy, model_series_levels,
                            optimize_two_stage)
    from .qdefect import quantum_defect

    series = _read_series(args.levels)
    default = Strategy.default(args.strategy, series)
    labels = list(default.labels)
    for i, v in enumerate((args.n1, args.n2, args.n3)):
        if v is not None:
            if i >= len(labels):
                raise InputError("--n3 only applies to low_plus_average")
            labels[i] = v
    try:
        strategy = Strategy(args.strategy, tuple(labels))
        spec = ObjectiveSpec(series, strategy, args.residual_space, _solver(args),
                             z_nuclear=args.z_nuclear)
    except (ValueError, KeyError) as exc:
        raise InputError(f"strategy: {exc}") from None
    # the manifest records the labels actually used
    args.n1, args.n2 = labels[0], labels[1]
    args.n3 = labels[2] if len(labels) > 2 else None
    p0 = _floats(args.p0, "--p0", 2)
    write_manifest(out, args)
    res = optimize_two_stage(spec, p0, args.stage1_tol, args.stage2_tol, args.max_iter,
                             args.stage1_h)
    stage1 = res.diagnostics.get("stage1")
    rows = []
    for stage in (stage1, res):
        if stage is None:
            continue
        for it, *x, norm in stage.history:
            rows.append((stage.stage, it, float(x[0]), float(x[1]), float(norm)))
    _write_csv(out / "iterates.csv", ("stage", "iteration", "eps1", "eps2", "residual_norm"), rows)
    (out / "params.txt").write_text(
        f"epsilon1 = {res.x[0]:.10f}\n"
        f"epsilon2 = {res.x[1]:.10f}\n"
        f"z_nuclear = {args.z_nuclear}\n"
        f"l = {series.l}\n"
        f"strategy = {strategy.kind} {' '.join(map(str, strategy.labels))}\n"
        f"residual_norm = {res.residual_norm:.6e}\n"
        f"iterations = {res.iterations}\n"
        f"converged = {str(res.converged).lower()}\n")
    model = model_series_levels(series, res.x, _solver(args), args.z_nuclear,
                                res.diagnostics.get("nodes_first"))
    rows = []
    for n, E in zip(series.n, series.energies):
        Em = model[n]
        rows.append((n, E, Em, (Em - E) / abs(E), quantum_defect(E, n), quantum_defect(Em, n)))
    _write_csv(out / "levels_check.csv",
               ("n", "E_exp_Ry", "E_model_Ry", "rel_dev", "mu_exp", "mu_model"), rows)
    if args.plot:
        from .plotting import plot_defects
        plot_defects(series.n, [r[4] for r in rows], out / "levels_check.png", [r[5] for r in rows])
    print(f"eps1 = {res.x[0]:.6f}  eps2 = {res.x[1]:.6f}  |G| = {res.residual_norm:.2e}  "
          f"({res.message})")
    return EXIT_OK if res.converged else EXIT_NUMERICAL


def cmd_levels(args, out: Path) -> int:
    from .cfm import find_eigenvalues, eigenfunction
    from .potentials import GszParams, PotentialSpec

    lo, hi = _floats(args.window, "--window", 2)
    try:
        V = PotentialSpec.gsz_ion(GszParams(args.eps1, args.eps2, args.z_nuclear, args.z_residual))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    write_manifest(out, args)
    cfg = _solver(args)
    sol = find_eigenvalues(V, args.l, (lo, hi), args.n_scan, cfg)
    rows = []
    for E in sol.energies:
        nodes = eigenfunction(V, args.l, E, cfg).nodes
        n = nodes + args.l + 1
        nu = args.z_residual / math.sqrt(-E)
        rows.append((n, nodes, float(E), float(ry_to_ev(E)), n - nu))
    _write_csv(out / "levels.csv", ("n", "nodes", "E_Ry", "E_eV", "mu"), rows)
    print(f"{len(rows)} levels in [{lo}, {hi}] Ry")
    return EXIT_OK


def cmd_qd(args, out: Path) -> int:
    from .optimizer import model_series_levels
    from .qdefect import quantum_defect

    series = _read_series(args.levels)
    if (args.eps1 is None) != (args.eps2 is None):
        raise InputError("give both --eps1 and --eps2 or neither")
    write_manifest(out, args)
    mu = series.defects
    rows = [(n, E, m) for n, E, m in zip(series.n, series.energies, mu)]
    header = ["n", "E_Ry", "mu"]
    mu_model = None
    if args.eps1 is not None:
        model = model_series_levels(series, (args.eps1, args.eps2), _solver(args), args.z_nuclear)
        mu_model = [quantum_defect(model[n], n) for n in series.n]
        rows = [r + (model[r[0]], mm, mm - r[2]) for r, mm in zip(rows, mu_model)]
        header += ["E_model_Ry", "mu_model", "mu_diff"]
    _write_csv(out / "qd.csv", header, rows)
    if args.plot:
        from .plotting import plot_defects
        plot_defects(series.n, mu, out / "qd.png", mu_model)
    return EXIT_OK


def _phase_potential(args, eps=None):
    from .dwba import core_density, static_exchange_potential
    from .potentials import GszParams, PotentialSpec

    e1, e2 = eps if eps is not None else (args.eps1, args.eps2)
    if args.model == "fm":
        return static_exchange_potential(18, core_density(), 0.0, alpha_d=args.alpha_d,
                                         r_cut=args.r_cut)
    if args.model == "fitted-entrance":
        return PotentialSpec.gsz_polarization(18, e1, e2, args.alpha_d, args.r_cut)
    if args.model == "gsz":
        return PotentialSpec.gsz_ion(GszParams(e1, e2, 18, args.z_residual))
    if args.model == "coulomb":
        return PotentialSpec.coulomb(args.charge)
    return PotentialSpec.square_well(args.depth, args.radius)


def cmd_phase(args, out: Path) -> int:
    from .scattering import (fit_potential_to_phaseshifts, gsz_polarization_family,
                             load_phase_shift_targets, phase_shift, wrap_phase)

    ls = _ints(args.l, "--l")
    energies = _floats(args.energies, "--energies")
    if not ls or not energies or min(energies) <= 0 or min(ls) < 0:
        raise InputError("need l >= 0 and positive energies")
    if args.model == "fitted-entrance" and max(energies) > args.fit_limit:
        raise InputError(f"fitted-entrance potential is only valid up to {args.fit_limit:g} eV; "
                         f"requested {max(energies):g} eV")
    try:
        ref = load_phase_shift_targets(args.reference) if args.reference else None
        fit_targets = load_phase_shift_targets(args.fit) if args.fit else None
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if fit_targets is not None and args.model != "fitted-entrance":
        raise InputError("--fit needs --model fitted-entrance")
    write_manifest(out, args)
    cfg = _solver(args)
    eps = None
    if fit_targets is not None:
        fam = gsz_polarization_family(18.0, args.alpha_d, args.r_cut)
        fit = fit_potential_to_phaseshifts(fit_targets, fam, (args.eps1, args.eps2), cfg)
        eps = tuple(float(v) for v in fit.params)
        (out / "entrance_fit.txt").write_text(
            f"epsilon1 = {eps[0]:.10f}\nepsilon2 = {eps[1]:.10f}\n"
            f"alpha_d = {args.alpha_d!r}\nr_cut = {args.r_cut!r}\n"
            f"rms_rad = {fit.rms:.6e}\nconverged = {str(fit.converged).lower()}\n")
    V = _phase_potential(args, eps)
    rows = []
    for l in ls:
        for e in energies:
            d = phase_shift(V, l, ev_to_ry(e), cfg).delta
            rows.append((l, float(e), float(d)))
    header = ["l", "E_eV", "delta_rad"]
    if ref is not None:
        table = {(p.l, round(p.E_eV, 9)): p.delta for p in ref}
        ext = []
        for l, e, d in rows:
            r = table.get((l, round(e, 9)))
            ext.append((l, e, d, "" if r is None else float(r),
                        "" if r is None else float(wrap_phase(d - r))))
        rows = ext
        header += ["reference_rad", "residual_rad"]
    _write_csv(out / "phase.csv", header, rows)
    if args.plot:
        from .plotting import plot_phase_shifts
        plot_phase_shifts([r[:3] for r in rows], out / "phase.png",
                          [(p.l, p.E_eV, p.delta) for p in ref] if ref else None)
    return EXIT_OK


def _read_experiment(path):
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read experiment {path}: {exc}") from None
    if data.shape[1] not in (2, 3) or data.shape[0] < 1:
        raise InputError(f"{path}: expected 'theta_deg value [error]' rows")
    err = data[:, 2] if data.shape[1] == 3 else np.zeros(data.shape[0])
    return data[:, 0], data[:, 1], err


def rescale_overlay(curve, theta, value, error, at: float = 270.0):
    """Scale experimental points so the point nearest ``at`` lands on the model curve."""
    i = int(np.argmin(np.abs(((theta - at + 180.0) % 360.0) - 180.0)))
    if value[i] == 0:
        raise InputError("experimental value at the normalisation angle is zero")
    s = curve.at(theta[i]) / value[i]
    return s, value * s, error * s


def cmd_tdcs(args, out: Path) -> int:
    from .dwba import MODELS, Kinematics, argon_channels, tdcs

    energies = _floats(args.e_exc, "--e-exc")
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in MODELS:
            raise InputError(f"unknown model {m!r}; choose from {', '.join(MODELS)}")
    if not energies or min(energies) <= 0:
        raise InputError("excess energies must be positive")
    fit = _floats(args.entrance_fit, "--entrance-fit", 4) if args.entrance_fit else None
    exp = _read_experiment(args.experiment) if args.experiment else None
    if exp is not None and args.overlay_model not in models:
        raise InputError(f"overlay needs a {args.overlay_model} curve; add it to --models")
    if not 0 < args.theta_step <= 180:
        raise InputError("--theta-step must lie in (0, 180]")
    theta = tuple(float(t) for t in np.arange(0.0, 360.0 - 1e-9, args.theta_step))
    write_manifest(out, args)
    status = EXIT_OK
    for E in energies:
        curves = []
        for model in models:
            cfg = argon_channels(model, E, l_max=args.l_max, lambda_max=args.lambda_max,
                                 z_eff=args.z_eff, entrance_fit=fit,
                                 entrance_switch_ev=args.entrance_switch,
                                 entrance_polarization=args.entrance_polarization,
                                 exit_exchange=_bool(args.exit_exchange),
                                 ionization_potential=args.ionization_potential,
                                 one_body_term=_bool(args.one_body), r_max=args.r_max,
                                 dx=args.dx)
            kin = Kinematics(E, args.ionization_potential, theta)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                curve = tdcs(cfg, kin, threads=args.threads)
            for w in caught:
                log.warning("%s E_exc=%g: %s", model, E, w.message)
            curves.append(curve)
            name = f"tdcs_{model}_E{E:g}.csv"
            _write_csv(out / name, ("theta_deg", "sigma_au", "model_tag", "E_exc_eV"),
                       [(float(t), float(s), model, float(E)) for t, s in zip(curve.theta, curve.sigma)])
            print(f"{name}: integrated {curve.integrated():.6e} a.u., "
                  f"last-l change {curve.diagnostics.partial_wave_change:.1e}")
        overlay = None
        if exp is not None:
            ref = next(c for c in curves if c.model_tag == args.overlay_model)
            scale, v, e = rescale_overlay(ref, *exp, at=args.normalize_at)
            overlay = (exp[0], v, e)
            _write_csv(out / f"overlay_E{E:g}.csv",
                       ("theta_deg", "value_scaled", "error_scaled", "scale"),
                       [(float(t), float(a), float(b), float(scale)) for t, a, b in zip(exp[0], v, e)])
        if args.plot:
            from .plotting import plot_tdcs
            plot_tdcs(curves, out / f"tdcs_E{E:g}.png", overlay)
    return status


COMMANDS = {"optimize": cmd_optimize, "levels": cmd_levels, "qd": cmd_qd,
            "phase": cmd_phase, "tdcs": cmd_tdcs}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            args = _apply_config(ap, args, argv)
        if args.command is None:
            ap.print_help()
            return EXIT_INPUT
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        return COMMANDS[args.command](args, Path(args.out_dir))
    except InputError as exc:
        print(f"qdwba: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # numerical failures surface as a clean exit status
        from .cfm import SolverError
        from .optimizer import ObjectiveError, OptimizerError
        from .scattering import PhaseShiftError
        if isinstance(exc, (SolverError, ObjectiveError, OptimizerError, PhaseShiftError)):
            print(f"qdwba: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        raise


if __name__ == "__main__":
    sys.exit(main())
