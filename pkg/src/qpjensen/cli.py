"""Command-line surface: every verification as a reproducible run.

Each subcommand resolves its full configuration (defaults included),
echoes it into the JSON output, and writes CSV/JSON deterministically:
identical configuration and seed give byte-identical files.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .cocycle import LEParams, lyapunov_spectrum, schrodinger_cocycle
from .dual import (
    build_dual,
    dual_limit_table,
    dual_spectrum,
    rescaling_residual,
    shifted_spectrum_check,
    symplectic_residual,
)
from .errors import ConfigError, NumericalError, QpjError
from .greens import (
    duality_residual,
    dual_kernel_from_frames,
    dual_resolvent,
    johnson_moser_residual,
    strip_greens,
    winding_number,
)
from .jensen import (
    approximate_spectrum,
    auto_energy,
    classify,
    haro_puig_many,
    profile,
    scalar_jensen,
)
from .model import (
    GOLDEN_MEAN,
    ZeroPotential,
    amo,
    load_potential,
    parse_complex,
    sem,
)
from .numkernel import DEFAULT_SEED


def _fmt(x):
    """17 significant digits, '.' decimal, no separators."""
    return f"{float(x):.17g}"


def _json_num(x):
    x = float(x)
    if not np.isfinite(x):
        raise NumericalError("non-finite value in JSON output")
    return x


def _json_complex(z, key):
    z = complex(z)
    return {f"{key}_re": _json_num(z.real), f"{key}_im": _json_num(z.imag)}


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v
                              for v in row))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def parse_grid(text):
    """'a:b:n' -> n equally spaced points from a to b inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be 'a:b:n', got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if n < 1:
        raise ConfigError("grid needs at least one point")
    return np.linspace(a, b, n)


@dataclass
class RunConfig:
    command: str
    preset: str
    alpha: float
    seed: int
    phase_count: int
    orbit_length: int
    qr_stride: int
    threads: int
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = asdict(self)
        d["version"] = __version__
        return d


def add_common(p):
    p.add_argument("--preset", choices=["amo", "sem"],
                   help="built-in model family")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="amo coupling")
    p.add_argument("--lambda1", type=float, help="sem first harmonic")
    p.add_argument("--lambda2", type=float, help="sem second harmonic")
    p.add_argument("--potential", help="coefficient file (k re im per line)")
    p.add_argument("--alpha", type=float, default=GOLDEN_MEAN,
                   help="frequency in (0,1); default golden mean")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                   help="64-bit seed; QPJ_SEED env overrides the default")
    p.add_argument("--phases", type=int, default=32,
                   help="phase grid size for exponent estimation")
    p.add_argument("--orbit", type=int, default=None,
                   help="orbit length (default: 1e5 for 2x2, 2e4 for duals)")
    p.add_argument("--stride", type=int, default=1,
                   help="QR refactor stride")
    p.add_argument("--threads", type=int, default=0,
                   help="cap BLAS parallelism (0 = leave as is)")
    p.add_argument("--out-json", default="-", help="JSON output path")


def resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QPJ_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError as exc:
            raise ConfigError(f"bad QPJ_SEED {env!r}") from exc
    return DEFAULT_SEED


def resolve_potential(args, allow_zero=False):
    given = [args.preset is not None, args.potential is not None]
    if sum(given) != 1:
        raise ConfigError("give exactly one of --preset or --potential")
    if args.preset == "amo":
        if args.lam is None:
            raise ConfigError("--preset amo needs --lambda")
        return amo(args.lam), f"amo({args.lam})"
    if args.preset == "sem":
        if args.lambda1 is None or args.lambda2 is None:
            raise ConfigError("--preset sem needs --lambda1 and --lambda2")
        return sem(args.lambda1, args.lambda2), f"sem({args.lambda1},{args.lambda2})"
    pot = load_potential(args.potential, allow_zero=allow_zero)
    return pot, f"file:{args.potential}"


def resolve_energy(text, potential, alpha):
    if text == "auto":
        if isinstance(potential, ZeroPotential):
            raise ConfigError("auto energy needs a nonzero potential")
        return complex(auto_energy(potential, alpha))
    return parse_complex(text)


def le_params(args, seed):
    return LEParams(
        phase_count=args.phases,
        orbit_length=args.orbit,
        qr_stride=args.stride,
        seed=seed,
        transient=128,
    )


def cap_threads(n):
    if n <= 0:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(n)
    except ImportError:
        # best effort only; the numerics are identical either way
        os.environ.setdefault("OMP_NUM_THREADS", str(n))


def make_config(args, name, desc, **extra):
    return RunConfig(
        command=name,
        preset=desc,
        alpha=args.alpha,
        seed=resolve_seed(args),
        phase_count=args.phases,
        orbit_length=args.orbit if args.orbit is not None else -1,
        qr_stride=args.stride,
        threads=args.threads,
        extra=extra,
    )


# -- subcommands ---------------------------------------------------------------


def cmd_lyapunov(args):
    pot, desc = resolve_potential(args, allow_zero=True)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    energy = resolve_energy(args.energy, pot, args.alpha)
    cfg = make_config(args, "lyapunov", desc, energy=str(args.energy),
                      eps=args.eps)
    spec = lyapunov_spectrum(
        schrodinger_cocycle(pot, energy, args.eps, args.alpha),
        le_params(args, seed),
    )
    payload = {
        "config": cfg.as_dict(),
        **_json_complex(energy, "energy"),
        "eps": _json_num(args.eps),
        "exponents": [_json_num(v) for v in spec.exponents],
        "stderr": [_json_num(v) for v in spec.stderr],
        "orbit_length": spec.orbit_length,
        "phase_count": spec.phase_count,
    }
    write_json(args.out_json, payload)
    return 0


def cmd_dual_spectrum(args):
    pot, desc = resolve_potential(args)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    energy = resolve_energy(args.energy, pot, args.alpha)
    cfg = make_config(args, "dual-spectrum", desc, energy=str(args.energy),
                      d_list=args.d_list or "")
    le = le_params(args, seed) if args.orbit is not None else None
    payload = {"config": cfg.as_dict(), **_json_complex(energy, "energy")}
    if args.analytic and not args.d_list:
        args.d_list = ",".join(str(d) for d in range(1, pot.degree + 1))
    if args.d_list:
        from .model import AnalyticPotential, TrigPotential

        degrees = [int(x) for x in args.d_list.split(",")]
        dmax = pot.degree
        truncs = []
        for dd in degrees:
            if dd > dmax:
                raise ConfigError(f"degree {dd} exceeds potential degree {dmax}")
            c = pot.coeffs[dmax - dd : dmax + dd + 1]
            truncs.append(TrigPotential(c))
        ladder = AnalyticPotential(tuple(truncs), band=args.band)
        table = dual_limit_table(ladder, energy, degrees, args.alpha, le=le)
        payload["table"] = [
            {
                "degree": int(dd),
                "lhat": [_json_num(v) for v in spec.lhat],
                "stderr": [_json_num(v) for v in spec.stderr],
            }
            for dd, spec in zip(table.degrees, table.spectra)
        ]
        payload["cauchy_differences"] = [
            [_json_num(v) for v in row] for row in table.differences
        ]
    else:
        spec = dual_spectrum(pot, energy, args.alpha, le=le,
                             group_tol=args.group_tol)
        payload.update(
            {
                "gamma": [_json_num(v) for v in spec.gamma],
                "lhat": [_json_num(v) for v in spec.lhat],
                "stderr": [_json_num(v) for v in spec.stderr],
                "groups": [
                    {"gamma": _json_num(g), "multiplicity": int(m)}
                    for g, m in spec.groups
                ],
                "group_tol": _json_num(spec.group_tol),
                "pairing_defect": (
                    _json_num(spec.pairing_defect)
                    if spec.pairing_defect is not None else None
                ),
            }
        )
    write_json(args.out_json, payload)
    return 0


def cmd_jensen(args):
    pot, desc = resolve_potential(args)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    energy = resolve_energy(args.energy, pot, args.alpha)
    eps_grid = parse_grid(args.eps)
    cfg = make_config(args, "jensen", desc, energy=str(args.energy),
                      eps=args.eps, fit_tol=args.fit_tol or -1.0)
    prof = profile(
        pot, energy, float(eps_grid[0]), float(eps_grid[-1]), eps_grid.size,
        args.alpha, le=le_params(args, seed), fit_tol=args.fit_tol,
        group_tol=args.group_tol,
    )
    rows = [
        (prof.eps_grid[i], prof.values[i], prof.prediction[i], prof.stderr[i])
        for i in range(prof.eps_grid.size)
    ]
    write_csv(args.out_csv, ["eps", "L_measured", "L_predicted", "stderr"], rows)
    payload = {
        "config": cfg.as_dict(),
        **_json_complex(energy, "energy"),
        "base_value": _json_num(prof.base_value),
        "turning_points": [_json_num(v) for v in prof.turning_points],
        "predicted_turning_points": [
            _json_num(v) for v in prof.predicted_turning_points
        ],
        "slope_integers": [s.slope_integer for s in prof.segments],
        "slope_increments": [int(v) for v in prof.slope_increments],
        "segments": [
            {
                "lo": _json_num(s.lo),
                "hi": _json_num(s.hi),
                "slope_integer": s.slope_integer,
                "intercept": _json_num(s.intercept),
            }
            for s in prof.segments
        ],
        "sup_deviation": _json_num(prof.sup_deviation),
        "fit_tol": _json_num(prof.fit_tol),
        "dual_gamma": [_json_num(v) for v in prof.dual.gamma],
    }
    write_json(args.out_json, payload)
    return 0


def cmd_classify(args):
    pot, desc = resolve_potential(args)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    if args.energy_grid:
        energies = parse_grid(args.energy_grid)
    else:
        energies = [resolve_energy(args.energy, pot, args.alpha)]
    cfg = make_config(args, "classify", desc,
                      energy_grid=args.energy_grid or str(args.energy),
                      tau=args.tau)
    le = le_params(args, seed)
    rows = []
    results = []
    for e in energies:
        try:
            c = classify(pot, complex(e), args.alpha, le=le, tau=args.tau)
            rows.append(
                (c.energy.real, c.lyapunov, c.dual_smallest, c.regime,
                 str(c.omega),
                 c.subcritical_radius if c.subcritical_radius is not None
                 else float("nan"),
                 str(c.uniform))
            )
            results.append(c.regime)
        except QpjError as exc:
            rows.append((complex(e).real, float("nan"), float("nan"),
                         type(exc).__name__, "nan", float("nan"), "nan"))
            results.append(type(exc).__name__)
    header = ["E", "L0", "Lhat1", "regime", "omega", "h", "uniform"]
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, float) and np.isnan(v):
                cells.append("")
            else:
                cells.append(_fmt(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out_csv == "-":
        sys.stdout.write(text)
    else:
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    write_json(args.out_json,
               {"config": cfg.as_dict(), "regimes": results})
    return 0


def cmd_greens_check(args):
    pot, desc = resolve_potential(args)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    energy = resolve_energy(args.energy, pot, args.alpha)
    cfg = make_config(args, "greens-check", desc, energy=str(args.energy),
                      eps=args.eps, truncation=args.truncation)
    le = le_params(args, seed)
    dc = build_dual(pot, complex(energy).real, 0.0, args.alpha)
    out = {"config": cfg.as_dict(), **_json_complex(energy, "energy"),
           "eps": _json_num(args.eps)}
    out["rescaling_residual"] = _json_num(
        rescaling_residual(pot, energy, args.eps, args.alpha, seed=seed)
    )
    out["symplectic_residual"] = _json_num(
        symplectic_residual(dc, seed=seed)
    )
    shift = shifted_spectrum_check(pot, energy, args.eps, args.alpha)
    out["shift_deviation"] = _json_num(shift.deviation)
    hp = haro_puig_many(pot, [energy], args.alpha, le=le)[0]
    out["haro_puig_residual"] = _json_num(hp.residual)
    sj = scalar_jensen(pot, energy, args.eps)
    out["scalar_jensen_difference"] = _json_num(sj.difference)
    strip_energy = energy if complex(energy).imag > 0 else complex(energy) + 1j
    sg = strip_greens(pot, strip_energy, 0.31, args.alpha, seed=seed)
    out["strip_residuals"] = {k: _json_num(v) for k, v in sg.residuals.items()}
    out.update(_json_complex(strip_energy, "strip_energy"))
    gk = dual_kernel_from_frames(pot, strip_energy, 0.29, args.alpha, seed=seed)
    dense = dual_resolvent(pot, 0.29, 0.0, strip_energy, args.alpha, 400)[0]
    out["kernel_vs_dense"] = _json_num(abs(gk.green(0, 0) - dense))
    out["kernel_delta_residual"] = _json_num(gk.delta_residual(0))
    dr = duality_residual(pot, strip_energy, args.eps, args.alpha,
                          half_width=args.truncation, phase_count=args.phases_avg,
                          seed=seed)
    out["duality_difference"] = _json_num(dr.difference)
    out["duality_difference_doubled"] = _json_num(dr.difference_doubled)
    try:
        jm = johnson_moser_residual(pot, strip_energy, args.eps, args.alpha,
                                    le=le, seed=seed)
        out["johnson_moser_residual"] = _json_num(jm.residual)
        out["ricatti_residual"] = _json_num(jm.ricatti_residual)
    except NumericalError as exc:
        out["johnson_moser_residual"] = None
        out["johnson_moser_skipped"] = f"{type(exc).__name__}: {exc}"
    write_json(args.out_json, out)
    return 0


def cmd_winding(args):
    pot, desc = resolve_potential(args)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    e_base = resolve_energy(args.base_energy, pot, args.alpha)
    cfg = make_config(args, "winding", desc, base_energy=args.base_energy,
                      eps=args.eps, sites=args.sites)
    w = winding_number(
        pot, complex(e_base).real, args.eps, args.alpha, sites=args.sites,
        theta_steps=args.theta_steps, le=le_params(args, seed), seed=seed,
    )
    payload = {
        "config": cfg.as_dict(),
        **_json_complex(w.base_energy, "base_energy"),
        "eps": _json_num(w.eps),
        "eps_used": _json_num(w.eps_used),
        "sites": w.sites,
        "theta_steps": w.theta_steps,
        "nu": _json_num(w.nu),
        "snapped": int(w.snapped),
        "profile_slope": _json_num(w.profile_slope),
        "slope_integer": int(w.slope_integer),
    }
    write_json(args.out_json, payload)
    return 0


def cmd_spectrum_approx(args):
    pot, desc = resolve_potential(args, allow_zero=True)
    seed = resolve_seed(args)
    cap_threads(args.threads)
    approx = approximate_spectrum(
        pot, args.alpha, truncation=args.truncation,
        phase_count=args.phases_avg, merge_tol=args.merge_tol, seed=seed,
    )
    rows = [(lo, hi) for lo, hi in approx.intervals]
    write_csv(args.out_csv, ["lo", "hi"], rows)
    cfg = make_config(args, "spectrum-approx", desc,
                      truncation=args.truncation, merge_tol=args.merge_tol)
    write_json(args.out_json, {
        "config": cfg.as_dict(),
        "interval_count": len(approx.intervals),
        "span": [_json_num(approx.intervals[0][0]),
                 _json_num(approx.intervals[-1][1])],
    })
    return 0


def build_parser():
    root = argparse.ArgumentParser(
        prog="qpj",
        description="complexified-exponent toolkit for quasiperiodic cocycles",
    )
    root.add_argument("--version", action="version", version=__version__)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum of the transfer cocycle")
    add_common(p)
    p.add_argument("--energy", required=True, help="re,im or 'auto'")
    p.add_argument("--eps", type=float, default=0.0)
    p.set_defaults(fn=cmd_lyapunov)

    p = sub.add_parser("dual-spectrum", help="dual exponents at one energy")
    add_common(p)
    p.add_argument("--energy", required=True)
    p.add_argument("--group-tol", type=float, default=None)
    p.add_argument("--analytic", action="store_true",
                   help="emit the truncation-ladder convergence table")
    p.add_argument("--d-list", help="comma list of ladder degrees "
                                    "(default with --analytic: 1..degree)")
    p.add_argument("--band", type=float, default=1.0,
                   help="strip half-width for ladder runs")
    p.set_defaults(fn=cmd_dual_spectrum)

    p = sub.add_parser("jensen", help="measured vs predicted exponent profile")
    add_common(p)
    p.add_argument("--energy", required=True)
    p.add_argument("--eps", required=True, help="grid a:b:n")
    p.add_argument("--fit-tol", type=float, default=None)
    p.add_argument("--group-tol", type=float, default=None)
    p.add_argument("--out-csv", default="-")
    p.set_defaults(fn=cmd_jensen)

    p = sub.add_parser("classify", help="regime classification per energy")
    add_common(p)
    p.add_argument("--energy", help="re,im or 'auto'")
    p.add_argument("--energy-grid", help="a:b:n real grid")
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--out-csv", default="-")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("greens-check", help="Green's-function residual battery")
    add_common(p)
    p.add_argument("--energy", required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--truncation", type=int, default=600)
    p.add_argument("--phases-avg", type=int, default=128)
    p.set_defaults(fn=cmd_greens_check)

    p = sub.add_parser("winding", help="determinant winding per site")
    add_common(p)
    p.add_argument("--base-energy", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--sites", type=int, default=128)
    p.add_argument("--theta-steps", type=int, default=None)
    p.set_defaults(fn=cmd_winding)

    p = sub.add_parser("spectrum-approx", help="interval hull of the spectrum")
    add_common(p)
    p.add_argument("--truncation", type=int, default=1000)
    p.add_argument("--phases-avg", type=int, default=16)
    p.add_argument("--merge-tol", type=float, default=0.02)
    p.add_argument("--out-csv", default="-")
    p.set_defaults(fn=cmd_spectrum_approx)

    return root


def _merge_negative_values(argv):
    """Join option values that start with a minus sign onto their flag.

    argparse reads '-3:3:61' or '-1,0.5' as an unknown option; merging
    them as '--flag=value' keeps the documented space-separated syntax
    working for grids and complex scalars.
    """
    merged = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            tok.startswith("--")
            and "=" not in tok
            and nxt is not None
            and len(nxt) > 1
            and nxt[0] == "-"
            and (nxt[1].isdigit() or nxt[1] == ".")
        ):
            merged.append(f"{tok}={nxt}")
            skip = True
        else:
            merged.append(tok)
    return merged


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(_merge_negative_values(
        sys.argv[1:] if argv is None else list(argv)
    ))
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        write_json("-", {"error": type(exc).__name__, "message": str(exc)})
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        write_json("-", {"error": type(exc).__name__, "message": str(exc)})
        return 3


if __name__ == "__main__":
    sys.exit(main())
