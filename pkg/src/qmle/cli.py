"""Command-line front end: ``qmle simulate | reconstruct | estimate | replay``.

Every command writes its primary output at ``--out`` plus sidecars named
``<out>.<suffix>``, always including ``<out>.manifest.json``.  The manifest
echoes the fully resolved configuration and the digests of all inputs and
outputs; JSON reports carry the manifest's ``run_id`` (a digest of that
configuration, independent of the output path).  ``qmle replay <manifest>
--out <new>`` reruns the recorded command and reproduces every file byte for
byte.

Exit codes: 0 ok, 2 usage or data-format error, 3 I/O error, 4 the optimizer
did not converge (outputs are still written, with ``converged: false``).
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import io as qio
from .errors import CutoffTooSmall, NonUniqueMaximum, QMLEError
from .estimation import (
    DEFAULT_GAUSSIAN_CONFIG,
    CoherentReference,
    FockReference,
    estimate_eta_avalanche,
    estimate_eta_linear,
    estimate_gaussian,
    naive_eta_flagged,
)
from .optimize import OptConfig
from .povm import ClickSummary, HomodyneData, SpinData
from .sampler import (
    PHASE_MODES,
    SamplerConfig,
    sample_gaussian_homodyne,
    sample_homodyne,
    sample_on_off,
    sample_spin_pair,
    sample_squeezed_reference,
)
from .states import (
    GaussianParams,
    coherent_state,
    fock_state,
    overlap,
    singlet_density,
    squeezed_thermal_density,
    squeezed_vacuum,
    werner_density,
)
from .tomography import DEFAULT_FOCK_CONFIG, DEFAULT_SPIN_CONFIG, reconstruct_fock, reconstruct_spin

log = logging.getLogger("qmle")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NOT_CONVERGED = 0, 2, 3, 4
THREADS_ENV = "QMLE_THREADS"
STATES = ("coherent", "squeezed-vacuum", "squeezed-thermal", "fock", "singlet", "mixed", "squeezed-reference")
SPIN_STATES = ("singlet", "mixed")
ESTIMATORS = ("gaussian", "eta-linear", "eta-avalanche")
MAX_AUTO_DIM = 400


class UsageError(Exception):
    pass


def _complex(s) -> complex:
    try:
        return complex(str(s).replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {s!r}")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# --- state construction ----------------------------------------------------


def _squeeze(args) -> float:
    if args.nsq is not None:
        if args.r is not None:
            raise UsageError("give either --r or --nsq, not both")
        return float(np.arcsinh(np.sqrt(args.nsq)))
    return 0.0 if args.r is None else float(args.r)


def state_descriptor(args) -> dict:
    s = args.state
    if s == "coherent":
        return {"kind": s, "alpha": [args.alpha.real, args.alpha.imag]}
    if s == "squeezed-vacuum":
        return {"kind": s, "r": _squeeze(args)}
    if s == "squeezed-thermal":
        return {"kind": s, "n_th": args.nth, "r": _squeeze(args), "mu": [args.mu.real, args.mu.imag]}
    if s == "fock":
        return {"kind": s, "n": args.fock_n}
    if s == "singlet":
        return {"kind": s}
    if s == "mixed":
        return {"kind": s, "singlet_weight": args.weight}
    if s == "squeezed-reference":
        return {"kind": s, "x0": args.x0, "r": _squeeze(args)}
    raise UsageError(f"unknown state {s!r}")


def _build_optical(desc, dim):
    k = desc["kind"]
    if k == "coherent":
        return coherent_state(complex(*desc["alpha"]), dim).density()
    if k == "squeezed-vacuum":
        return squeezed_vacuum(desc["r"], dim).density()
    if k == "squeezed-thermal":
        return squeezed_thermal_density(desc["n_th"], desc["r"], complex(*desc["mu"]), dim)
    if k == "squeezed-reference":
        return squeezed_thermal_density(0.0, desc["r"], desc["x0"], dim)
    return fock_state(desc["n"], dim).density()


def truth_density(desc, dim=None):
    """Density matrix of a state descriptor; ``dim=None`` picks the smallest cutoff meeting the leakage bound."""
    if desc["kind"] == "singlet":
        return singlet_density()
    if desc["kind"] == "mixed":
        return werner_density(desc["singlet_weight"])
    if dim is not None:
        return _build_optical(desc, dim)
    d = 8 if desc["kind"] != "fock" else desc["n"] + 2
    while True:
        try:
            return _build_optical(desc, d)
        except CutoffTooSmall:
            if d >= MAX_AUTO_DIM:
                raise
            d = min(d + 8, MAX_AUTO_DIM)


def _gaussian_params(desc) -> GaussianParams:
    # S(r) squeezes x for r > 0, i.e. kappa = exp(-2r)
    k = desc["kind"]
    r = desc.get("r", 0.0)
    if k == "coherent":
        return GaussianParams(1.0, 1.0, *desc["alpha"])
    if k == "squeezed-vacuum":
        return GaussianParams(1.0, float(np.exp(-2 * r)))
    if k == "squeezed-thermal":
        return GaussianParams(float(1 / np.sqrt(2 * desc["n_th"] + 1)), float(np.exp(-2 * r)), *desc["mu"])
    raise UsageError(f"--sampler gaussian does not support state {k!r}")


# --- argument parsing ------------------------------------------------------


def _add_opt_flags(p, defaults: OptConfig, label: str):
    g = p.add_argument_group(f"optimizer ({label})")
    g.add_argument("--max-evals", type=int, default=defaults.max_evals)
    g.add_argument("--x-tol", type=float, default=defaults.x_tol)
    g.add_argument("--f-tol", type=float, default=defaults.f_tol)
    g.add_argument("--initial-step", type=float, default=defaults.initial_step)
    g.add_argument("--restarts", type=int, default=defaults.restarts)
    g.add_argument("--opt-seed", type=int, default=defaults.seed)


def _opt_config(args) -> OptConfig:
    try:
        return OptConfig(args.max_evals, args.x_tol, args.f_tol, args.initial_step, args.restarts, args.opt_seed)
    except ValueError as exc:
        raise UsageError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmle", description="Maximum-likelihood quantum state and parameter estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="primary output path; sidecars are written next to it")
    common.add_argument("--config", help="JSON file of flag defaults (command-line flags take precedence)")
    common.add_argument("--threads", type=int, default=_default_threads(), help=f"worker threads (default ${THREADS_ENV} or 1)")

    p = sub.add_parser("simulate", parents=[common], help="generate a measurement record file")
    p.add_argument("--state", choices=STATES, required=True)
    p.add_argument("--alpha", type=_complex, default="1", help="coherent amplitude, e.g. 1 or 0.5+0.2j")
    p.add_argument("--r", type=float, default=None, help="squeezing parameter (x is squeezed for r > 0)")
    p.add_argument("--nsq", type=float, default=None, help="squeezing photons sinh^2 r (alternative to --r)")
    p.add_argument("--nth", type=float, default=0.0, help="thermal photons")
    p.add_argument("--mu", type=_complex, default="0", help="displacement of the squeezed thermal state")
    p.add_argument("--fock-n", type=int, default=1)
    p.add_argument("--weight", type=float, default=0.0, help="singlet weight of the 'mixed' (Werner) state")
    p.add_argument("--x0", type=float, default=1.0, help="reference amplitude for 'squeezed-reference'")
    p.add_argument("--detector", choices=("homodyne", "onoff", "spin"), default=None)
    p.add_argument("--sampler", choices=("fock", "gaussian"), default="fock", help="homodyne outcome law: Fock-basis density or Gaussian closed form")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phase-mode", choices=PHASE_MODES, default="uniform")
    p.add_argument("--n-phases", type=int, default=1)
    p.add_argument("--grid-step", type=float, default=0.01, help="x-grid step of the inverse-CDF table")
    p.add_argument("--dim", type=int, default=None, help="Fock cutoff of the truth state (default: automatic)")

    p = sub.add_parser("reconstruct", parents=[common], help="ML density-matrix reconstruction")
    p.add_argument("data")
    p.add_argument("--cutoff", type=int, default=8)
    p.add_argument("--eta", type=float, default=None, help="detector efficiency (required for homodyne data)")
    p.add_argument("--truth", help="density-matrix JSON to compare against")
    p.add_argument("--n-starts", type=int, default=3, help="independent starts for spin data")
    p.add_argument("--clamp", action="store_true", help="clamp zero-probability records instead of failing")
    _add_opt_flags(p, DEFAULT_FOCK_CONFIG, "defaults shown for homodyne data")

    p = sub.add_parser("estimate", parents=[common], help="low-dimensional ML parameter estimation")
    p.add_argument("data")
    p.add_argument("--estimator", choices=ESTIMATORS, required=True)
    p.add_argument("--eta", type=float, default=None, help="detector efficiency (gaussian)")
    p.add_argument("--x0", type=float, default=None, help="reference amplitude (eta-linear)")
    p.add_argument("--r", type=float, default=None, help="reference squeezing (eta-linear)")
    p.add_argument("--alpha", type=_complex, default=None, help="coherent reference amplitude (eta-avalanche)")
    p.add_argument("--fock-n", type=int, default=None, help="Fock reference photon number (eta-avalanche)")
    p.add_argument("--reference", help="density-matrix JSON of the reference (eta-avalanche)")
    p.add_argument("--truth", help="density-matrix JSON for the gaussian photon table")
    p.add_argument("--n-max", type=int, default=30, help="largest photon number in the gaussian table")
    _add_opt_flags(p, DEFAULT_GAUSSIAN_CONFIG, "gaussian")

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    return parser


def _apply_config_file(parser, argv):
    """Re-parse ``argv`` with the ``--config`` file installed as subcommand defaults."""
    # find the command and the config file before required flags are enforced
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    if early.config is None or early.command not in choices:
        return parser.parse_args(argv)
    try:
        conf = qio.read_json(early.config)
    except OSError as exc:
        raise IOError(f"cannot read config {early.config}: {exc}")
    except ValueError as exc:
        raise UsageError(f"{early.config}: invalid JSON ({exc})")
    if not isinstance(conf, dict):
        raise UsageError(f"{early.config}: expected a JSON object")
    subparser = choices[early.command]
    known = {a.dest for a in subparser._actions}
    conf = {k.replace("-", "_"): v for k, v in conf.items()}
    unknown = set(conf) - known
    if unknown:
        raise UsageError(f"{early.config}: unknown keys {sorted(unknown)}")
    # config values pass through the flag parsers so they get the same types
    defaults = {}
    for a in subparser._actions:
        if a.dest in conf:
            v = conf[a.dest]
            try:
                v = a.type(v) if a.type is not None and v is not None else v
            except (TypeError, ValueError) as exc:
                raise UsageError(f"{early.config}: bad value for {a.dest!r} ({exc})")
            if a.choices is not None and v not in a.choices:
                raise UsageError(f"{early.config}: {a.dest!r} must be one of {sorted(a.choices)}")
            defaults[a.dest] = v
    subparser.set_defaults(**defaults)
    for a in subparser._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


# --- outputs ---------------------------------------------------------------


class _Outputs:
    """Collects files written by one command; removes them all if any write fails."""

    def __init__(self, out):
        self.out = Path(out)
        self.paths = []

    def path(self, suffix=""):
        return qio.sidecar(self.out, suffix) if suffix else self.out

    def write(self, suffix, writer):
        p = self.path(suffix)
        self.paths.append(p)
        writer(p)
        return p

    def digests(self):
        return {p.name: qio.sha256_file(p) for p in self.paths}

    def rollback(self):
        for p in self.paths + [self.path(".manifest.json")]:
            try:
                p.unlink()
            except OSError:
                pass


def _config_echo(args) -> dict:
    skip = {"verbose", "config", "out"}
    echo = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, complex):
            v = str(v)
        echo[k] = v
    return echo


def run_id(args) -> str:
    """Digest of the resolved configuration; shared by a manifest and every report it produced."""
    return hashlib.sha256(qio.dumps(_config_echo(args)).encode()).hexdigest()[:16]


def _manifest(args, outputs: _Outputs, inputs: dict, extra=None) -> dict:
    m = {
        "format_version": qio.FORMAT_VERSION,
        "tool_version": __version__,
        "command": args.command,
        "run_id": run_id(args),
        "config": _config_echo(args),
        "inputs": inputs,
        "outputs": outputs.digests(),
    }
    if extra:
        m.update(extra)
    return m


def _input(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return str(p.resolve())


def _resolve_inputs(args, keys) -> dict:
    """Check that input files exist and replace their paths in ``args`` by absolute ones."""
    inputs = {}
    for key in keys:
        if getattr(args, key, None):
            inputs[key] = _input(getattr(args, key))
            setattr(args, key, inputs[key])
    return inputs


def _magnitude_table(rho, title="|rho_mn|"):
    m = rho.matrix
    d = rho.dim
    lines = [title, "m\\n " + " ".join(f"{j:>8d}" for j in range(d))]
    for i in range(d):
        lines.append(f"{i:>3d} " + " ".join(f"{abs(m[i, j]):8.4f}" for j in range(d)))
    lines.append("")
    lines.append("Re rho_mn")
    for i in range(d):
        lines.append(f"{i:>3d} " + " ".join(f"{m[i, j].real:8.4f}" for j in range(d)))
    return "\n".join(lines) + "\n"


def _write_text(text):
    return lambda p: qio._atomic_write(p, text)


def _write_json(obj):
    return lambda p: qio.write_json(p, obj)


# --- commands --------------------------------------------------------------


def cmd_simulate(args) -> int:
    desc = state_descriptor(args)
    spin = desc["kind"] in SPIN_STATES
    detector = args.detector or ("spin" if spin else "homodyne")
    if spin != (detector == "spin"):
        raise UsageError(f"detector {detector!r} does not apply to state {desc['kind']!r}")
    if desc["kind"] == "squeezed-reference" and detector != "homodyne":
        raise UsageError("'squeezed-reference' produces homodyne data only")
    if args.sampler == "gaussian" and (spin or detector != "homodyne"):
        raise UsageError("--sampler gaussian applies to homodyne data only")
    if desc["kind"] == "mixed" and not 0 <= args.weight <= 1:
        raise UsageError("--weight must lie in [0, 1]")
    eta = args.eta
    if detector == "onoff":
        if not 0 <= eta <= 1:
            raise UsageError("--eta must lie in [0, 1]")
        cfg_eta = eta if eta > 0 else 1.0
    else:
        cfg_eta = eta
    try:
        cfg = SamplerConfig(args.seed, args.n, cfg_eta, args.phase_mode, args.n_phases, args.grid_step, args.threads)
    except ValueError as exc:
        raise UsageError(str(exc))
    rho = None
    if not (args.sampler == "gaussian" or desc["kind"] == "squeezed-reference") or spin:
        rho = truth_density(desc, args.dim)

    if desc["kind"] == "squeezed-reference":
        data = sample_squeezed_reference(desc["x0"], desc["r"], cfg)
    elif args.sampler == "gaussian":
        data = sample_gaussian_homodyne(_gaussian_params(desc), cfg)
    elif detector == "homodyne":
        data = sample_homodyne(rho, cfg)
    elif detector == "spin":
        data = sample_spin_pair(rho, cfg)
    else:
        data = sample_on_off(rho, cfg, eta)

    outs = _Outputs(args.out)
    try:
        outs.write("", lambda p: qio.write_records(p, data))
        if rho is not None:
            outs.write(".state.json", lambda p: qio.write_density_json(p, rho))
        sampler = cfg.describe()
        sampler["eta"] = eta
        man = _manifest(
            args,
            outs,
            {},
            {"seed": args.seed, "n_samples": args.n, "eta": eta, "state": desc, "detector": detector, "sampler": sampler},
        )
        qio.write_json(outs.path(".manifest.json"), man)
    except OSError:
        outs.rollback()
        raise
    log.info("wrote %d records to %s", len(data) if not isinstance(data, ClickSummary) else data.n_total, args.out)
    return EXIT_OK


def _read_data(path):
    return qio.read_records(path)


def cmd_reconstruct(args) -> int:
    inputs = _resolve_inputs(args, ("data", "truth"))
    cfg = _opt_config(args)
    data = _read_data(args.data)
    truth = qio.read_density_json(args.truth) if args.truth else None
    caught = []
    if isinstance(data, HomodyneData):
        if args.eta is None:
            raise UsageError("homodyne data need --eta")
        if args.cutoff < 2 or not 0 < args.eta <= 1:
            raise UsageError("need --cutoff >= 2 and 0 < --eta <= 1")
        rep = reconstruct_fock(data, args.cutoff, args.eta, cfg, args.clamp)
    elif isinstance(data, SpinData):
        if args.n_starts < 1:
            raise UsageError("--n-starts must be >= 1")
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always", NonUniqueMaximum)
            rep = reconstruct_spin(data, cfg, args.n_starts, args.clamp)
        caught = [str(x.message) for x in w if issubclass(x.category, NonUniqueMaximum)]
        for msg in caught:
            log.warning(msg)
    else:
        raise UsageError("click summaries carry no state information; use 'estimate --estimator eta-avalanche'")

    report = {"kind": "reconstruction", **rep.to_dict(), "warnings": caught}
    if truth is not None:
        d = max(truth.dim, rep.rho_ml.dim)
        try:
            report["overlap"] = overlap(rep.rho_ml.embed(d), truth.embed(d))
        except ValueError as exc:
            raise UsageError(f"truth does not match the data: {exc}")
    digests = {k: qio.sha256_file(v) for k, v in inputs.items()}
    report["input_digests"] = digests
    report["config"] = _config_echo(args)
    outs = _Outputs(args.out)
    report["run_id"] = run_id(args)
    try:
        outs.write("", _write_json(report))
        outs.write(".table.txt", _write_text(_magnitude_table(rep.rho_ml)))
        qio.write_json(outs.path(".manifest.json"), _manifest(args, outs, {k: {"path": inputs[k], "sha256": digests[k]} for k in inputs}))
    except OSError:
        outs.rollback()
        raise
    if not rep.converged:
        log.warning("optimizer did not converge after %d evaluations", rep.evals)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _avalanche_reference(args):
    given = [x is not None for x in (args.alpha, args.fock_n, args.reference)]
    if sum(given) != 1:
        raise UsageError("eta-avalanche needs exactly one of --alpha, --fock-n, --reference")
    if args.alpha is not None:
        return CoherentReference(args.alpha), {"coherent": str(args.alpha)}
    if args.fock_n is not None:
        if args.fock_n < 1:
            raise UsageError("--fock-n must be >= 1")
        return FockReference(args.fock_n), {"fock": args.fock_n}
    return qio.read_density_json(args.reference), {"density": args.reference}


def _photon_table(p_est, truth, n_max):
    cols = ["n", "estimated"] + (["theory", "abs_err"] if truth is not None else [])
    lines = [",".join(cols)]
    max_err = 0.0
    for n in range(n_max + 1):
        e = p_est[n] if n < p_est.size else 0.0
        row = [str(n), repr(float(e))]
        if truth is not None:
            t = truth[n] if n < truth.size else 0.0
            max_err = max(max_err, abs(e - t))
            row += [repr(float(t)), repr(float(abs(e - t)))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n", max_err


def cmd_estimate(args) -> int:
    inputs = _resolve_inputs(args, ("data", "truth", "reference"))
    data = _read_data(args.data)
    result = {"kind": "estimate", "estimator": args.estimator}
    tables = {}
    if args.estimator == "gaussian":
        if not isinstance(data, HomodyneData):
            raise UsageError("the gaussian estimator needs homodyne data")
        if args.eta is None or not 0 < args.eta <= 1:
            raise UsageError("gaussian estimation needs 0 < --eta <= 1")
        p, photons = estimate_gaussian(data, args.eta, _opt_config(args))
        result["estimate"] = {"delta": p.delta, "kappa": p.kappa, "a": p.a, "b": p.b}
        result["photon_numbers"] = {"n_th": photons.n_th, "n_sq": photons.n_sq, "n_coh": photons.n_coh}
        result["sigma"] = None
        rho_est = truth_density({"kind": "squeezed-thermal", "n_th": max(p.thermal_photons(), 0.0), "r": p.squeeze_r(), "mu": [p.a, p.b]})
        truth = qio.read_density_json(args.truth) if args.truth else None
        text, max_err = _photon_table(rho_est.photon_distribution(), truth.photon_distribution() if truth else None, args.n_max)
        tables[".photons.csv"] = text
        if truth is not None:
            d = max(truth.dim, rho_est.dim)
            result["overlap"] = overlap(rho_est.embed(d), truth.embed(d))
            result["max_photon_error"] = max_err
    elif args.estimator == "eta-linear":
        if not isinstance(data, HomodyneData):
            raise UsageError("the eta-linear estimator needs homodyne data")
        if args.x0 is None or args.r is None:
            raise UsageError("eta-linear needs --x0 and --r")
        est = estimate_eta_linear(data, args.x0, args.r)
        naive, clamped = naive_eta_flagged(data, args.x0)
        result["estimate"] = est.to_dict()
        result["naive"] = {"eta_av": naive, "clamped": clamped}
        result["sigma"] = est.sigma
        result["fisher"] = est.fisher
    else:
        if not isinstance(data, ClickSummary):
            raise UsageError("the eta-avalanche estimator needs a click summary")
        ref, ref_desc = _avalanche_reference(args)
        est = estimate_eta_avalanche(data, ref)
        result["reference"] = ref_desc
        result["estimate"] = est.to_dict()
        result["sigma"] = est.sigma
        result["fisher"] = est.fisher
    digests = {k: qio.sha256_file(v) for k, v in inputs.items()}
    result["input_digests"] = digests
    result["config"] = _config_echo(args)
    outs = _Outputs(args.out)
    result["run_id"] = run_id(args)
    try:
        outs.write("", _write_json(result))
        for suffix, text in tables.items():
            outs.write(suffix, _write_text(text))
        qio.write_json(outs.path(".manifest.json"), _manifest(args, outs, {k: {"path": inputs[k], "sha256": digests[k]} for k in inputs}))
    except OSError:
        outs.rollback()
        raise
    return EXIT_OK


def replay_argv(manifest: dict, out: str, threads=None) -> list:
    """Rebuild the command line recorded in a manifest, writing to ``out``."""
    cmd = manifest.get("command")
    conf = dict(manifest.get("config") or {})
    if cmd not in ("simulate", "reconstruct", "estimate"):
        raise UsageError(f"manifest has no replayable command ({cmd!r})")
    conf.pop("command", None)
    if threads is not None:
        conf["threads"] = threads
    argv = [cmd]
    positional = conf.pop("data", None)
    if positional is not None:
        argv.append(positional)
    for k, v in conf.items():
        if v is None or v is False:
            continue
        flag = "--" + k.replace("_", "-")
        argv += [flag] if v is True else [flag, str(v)]
    return argv + ["--out", out]


def cmd_replay(args) -> int:
    try:
        man = qio.read_json(_input(args.manifest))
    except ValueError as exc:
        raise UsageError(f"{args.manifest}: invalid manifest ({exc})")
    for name, rec in (man.get("inputs") or {}).items():
        if qio.sha256_file(rec["path"]) != rec["sha256"]:
            raise UsageError(f"input {name} ({rec['path']}) changed since the manifest was written")
    return main(replay_argv(man, args.out, args.threads))


COMMANDS = {"simulate": cmd_simulate, "reconstruct": cmd_reconstruct, "estimate": cmd_estimate, "replay": cmd_replay}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"qmle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qmle: error: {exc}", file=sys.stderr)
        return EXIT_IO
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, qio.DataFormatError) as exc:
        print(f"qmle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qmle: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (QMLEError, ValueError) as exc:
        print(f"qmle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
