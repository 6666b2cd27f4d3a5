"""Command-line front end: simulate scenarios, audit gains, locate equilibria.

Configuration is flat key = value text with sections (INI style); every CLI
flag overrides the corresponding file key.  Angle-valued inputs accept a
``deg`` suffix ("20deg") and are stored internally in radians.  A simulate
run writes the trajectory CSV, per-figure data files and a manifest that can
be fed back as the config to reproduce the run bit-identically.

Exit codes: 0 ok, 1 run failure (divergence, failed gain conditions, no
equilibrium), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from multiprocessing import Pool
from pathlib import Path
from typing import Optional

from . import __version__, certificate
from .controller import Gains
from .plant import PlantParams, actuator_equilibrium
from .reference import SCENARIOS
from .regularizer import nominal_from_true
from .sim import DivergenceError, SimConfig, Trajectory, integrate
from .plant import HoopState

# Section -> key -> default (as stored: radians, SI units).
DEFAULTS: dict[str, dict[str, str]] = {
    "plant": {
        "m_h": "1.0",
        "i_h": "0.021",
        "r": "0.18",
        "m_a": "3.28",
        "i_a": "0.035",
        "l": "0.14",
        "beta": "20deg",
        "g": "9.81",
        "delta_s": "0.0",
        "delta_a": "0.0",
    },
    "controller": {
        "k_p": "16.0",
        "k_d": "7.0",
        "k_i": "4.0",
        "k_c": "0.1",
        "mismatch": "1.5",
    },
    "reference": {
        "scenario": "fixed_point",
        "o_ref0": "0.0",
        "ramp_v": "0.2",
        "sin_amplitude": "0.3",
        "sin_rate": "0.5",
    },
    "simulation": {
        "theta0": "0.0",
        "o0": "-2.0",
        "omega0": "-0.1",
        "theta_a0": "0.0",
        "omega_a0": "0.1",
        "dt": "0.001",
        "t_end": "60.0",
        "stride": "10",
        "feedforward": "false",
        "open_loop": "false",
        "hold_dt": "none",
        "seed": "0",
    },
}

_ANGLE_KEYS = {("plant", "beta"), ("simulation", "theta0"), ("simulation", "theta_a0")}

SETTLING_BAND = 0.01  # |o_e| threshold for the settling-time summary metric


class ConfigError(Exception):
    """Bad configuration file or value; maps to exit code 2."""


def parse_angle(text: str) -> float:
    """Angle from config text: plain number = radians, 'deg' suffix = degrees."""
    text = text.strip()
    if text.endswith("deg"):
        return math.radians(float(text[: -len("deg")]))
    return float(text)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def load_config(path: Optional[str]) -> dict[str, dict[str, str]]:
    """Defaults overlaid with the config file (if any), as raw strings."""
    merged = {section: dict(keys) for section, keys in DEFAULTS.items()}
    if path is None:
        return merged
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    for section in parser.sections():
        if section in ("meta", "summary"):
            continue  # manifest extras, ignored on re-ingest
        if section not in merged:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        for key, value in parser.items(section):
            if key not in merged[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            merged[section][key] = value
    return merged


def _apply_overrides(cfg: dict[str, dict[str, str]], args: argparse.Namespace) -> None:
    mapping = {
        "m_h": ("plant", "m_h"), "i_h": ("plant", "i_h"), "r": ("plant", "r"),
        "m_a": ("plant", "m_a"), "i_a": ("plant", "i_a"), "l": ("plant", "l"),
        "beta": ("plant", "beta"), "g": ("plant", "g"),
        "delta_s": ("plant", "delta_s"), "delta_a": ("plant", "delta_a"),
        "kp": ("controller", "k_p"), "kd": ("controller", "k_d"),
        "ki": ("controller", "k_i"), "kc": ("controller", "k_c"),
        "mismatch": ("controller", "mismatch"),
        "scenario": ("reference", "scenario"), "o_ref0": ("reference", "o_ref0"),
        "ramp_v": ("reference", "ramp_v"),
        "sin_amplitude": ("reference", "sin_amplitude"),
        "sin_rate": ("reference", "sin_rate"),
        "theta0": ("simulation", "theta0"), "o0": ("simulation", "o0"),
        "omega0": ("simulation", "omega0"), "theta_a0": ("simulation", "theta_a0"),
        "omega_a0": ("simulation", "omega_a0"),
        "dt": ("simulation", "dt"), "t_end": ("simulation", "t_end"),
        "stride": ("simulation", "stride"), "hold_dt": ("simulation", "hold_dt"),
        "seed": ("simulation", "seed"),
    }
    for attr, (section, key) in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg[section][key] = str(value)
    if getattr(args, "feedforward", False):
        cfg["simulation"]["feedforward"] = "true"
    if getattr(args, "open_loop", False):
        cfg["simulation"]["open_loop"] = "true"


def build_plant(cfg: dict[str, dict[str, str]]) -> PlantParams:
    section = cfg["plant"]
    try:
        return PlantParams(
            m_h=float(section["m_h"]), i_h=float(section["i_h"]),
            r=float(section["r"]), m_a=float(section["m_a"]),
            i_a=float(section["i_a"]), l=float(section["l"]),
            beta=parse_angle(section["beta"]), g=float(section["g"]),
            delta_s=float(section["delta_s"]), delta_a=float(section["delta_a"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid plant parameters: {exc}") from exc


def build_gains(cfg: dict[str, dict[str, str]]) -> Gains:
    section = cfg["controller"]
    try:
        return Gains(
            k_p=float(section["k_p"]), k_d=float(section["k_d"]),
            k_i=float(section["k_i"]), k_c=float(section["k_c"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid gains: {exc}") from exc


def build_sim_config(cfg: dict[str, dict[str, str]]) -> SimConfig:
    plant = build_plant(cfg)
    gains = build_gains(cfg)
    try:
        nominal = nominal_from_true(plant, float(cfg["controller"]["mismatch"]))
        sim_section = cfg["simulation"]
        ref_section = cfg["reference"]
        hold_raw = sim_section["hold_dt"].strip().lower()
        hold_dt = None if hold_raw in ("none", "") else float(hold_raw)
        initial = HoopState(
            theta=parse_angle(sim_section["theta0"]),
            o=float(sim_section["o0"]),
            omega=float(sim_section["omega0"]),
            theta_a=parse_angle(sim_section["theta_a0"]),
            omega_a=float(sim_section["omega_a0"]),
        )
        return SimConfig(
            plant=plant, nominal=nominal, gains=gains,
            scenario=ref_section["scenario"],
            o_ref0=float(ref_section["o_ref0"]),
            ramp_v=float(ref_section["ramp_v"]),
            sin_amplitude=float(ref_section["sin_amplitude"]),
            sin_rate=float(ref_section["sin_rate"]),
            initial=initial,
            dt=float(sim_section["dt"]),
            t_end=float(sim_section["t_end"]),
            stride=int(sim_section["stride"]),
            feedforward=_parse_bool(sim_section["feedforward"]),
            hold_dt=hold_dt,
            open_loop=_parse_bool(sim_section["open_loop"]),
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def settling_time(traj: Trajectory, band: float = SETTLING_BAND) -> float:
    """Earliest time after which |o_e| stays inside the band; inf if never."""
    last_outside = None
    for i, value in enumerate(traj.o_e):
        if abs(value) >= band:
            last_outside = i
    if last_outside is None:
        return traj.t[0]
    if last_outside == len(traj.o_e) - 1:
        return math.inf
    return traj.t[last_outside + 1]


def _summary(traj: Trajectory) -> dict[str, float]:
    return {
        "terminal_o_e": abs(traj.o_e[-1]),
        "max_omega_a": max(abs(v) for v in traj.omega_a),
        "settling_time": settling_time(traj),
    }


def write_manifest(
    path: Path, cfg: dict[str, dict[str, str]], sim_cfg: SimConfig,
    summary: Optional[dict[str, float]] = None,
) -> None:
    """Write the run manifest: a re-ingestable config plus summary metrics.

    Values are normalized (angles in radians, floats via repr) so a rerun
    from the manifest reproduces the trajectory bit-identically.
    """
    out = configparser.ConfigParser(interpolation=None)
    out.optionxform = str
    p, initial = sim_cfg.plant, sim_cfg.initial
    normalized: dict[str, dict[str, str]] = {
        "plant": {
            "m_h": repr(p.m_h), "i_h": repr(p.i_h), "r": repr(p.r),
            "m_a": repr(p.m_a), "i_a": repr(p.i_a), "l": repr(p.l),
            "beta": repr(p.beta), "g": repr(p.g),
            "delta_s": repr(p.delta_s), "delta_a": repr(p.delta_a),
        },
        "controller": {
            "k_p": repr(sim_cfg.gains.k_p), "k_d": repr(sim_cfg.gains.k_d),
            "k_i": repr(sim_cfg.gains.k_i), "k_c": repr(sim_cfg.gains.k_c),
            "mismatch": cfg["controller"]["mismatch"],
        },
        "reference": {
            "scenario": sim_cfg.scenario,
            "o_ref0": repr(sim_cfg.o_ref0),
            "ramp_v": repr(sim_cfg.ramp_v),
            "sin_amplitude": repr(sim_cfg.sin_amplitude),
            "sin_rate": repr(sim_cfg.sin_rate),
        },
        "simulation": {
            "theta0": repr(initial.theta), "o0": repr(initial.o),
            "omega0": repr(initial.omega), "theta_a0": repr(initial.theta_a),
            "omega_a0": repr(initial.omega_a),
            "dt": repr(sim_cfg.dt), "t_end": repr(sim_cfg.t_end),
            "stride": str(sim_cfg.stride),
            "feedforward": "true" if sim_cfg.feedforward else "false",
            "open_loop": "true" if sim_cfg.open_loop else "false",
            "hold_dt": "none" if sim_cfg.hold_dt is None else repr(sim_cfg.hold_dt),
            "seed": cfg["simulation"]["seed"],
        },
    }
    for section, keys in normalized.items():
        out[section] = keys
    out["meta"] = {"tool_version": __version__}
    if summary is not None:
        out["summary"] = {key: repr(value) for key, value in summary.items()}
    with open(path, "w", encoding="utf-8") as fh:
        out.write(fh)


def _write_figure_files(out_dir: Path, traj: Trajectory, sim_cfg: SimConfig) -> list[Path]:
    """Plot-ready per-figure CSVs: position vs reference and the three error series."""
    ref_fn = sim_cfg.reference()
    files = []

    def dump(name: str, header: list[str], rows) -> None:
        target = out_dir / name
        with open(target, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) for v in row])
        files.append(target)

    dump(
        "fig_position.csv", ["t", "o", "o_ref"],
        ((t, o, ref_fn(t).o_ref) for t, o in zip(traj.t, traj.o)),
    )
    dump("fig_tracking_error.csv", ["t", "o_e"], zip(traj.t, traj.o_e))
    dump("fig_velocity_error.csv", ["t", "omega_e"], zip(traj.t, traj.omega_e))
    dump("fig_actuator_velocity.csv", ["t", "omega_a"], zip(traj.t, traj.omega_a))
    return files


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    sim_cfg = build_sim_config(cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        traj = integrate(sim_cfg)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        exc.trajectory.write_csv(out_dir / "trajectory.csv")
        write_manifest(out_dir / "manifest.ini", cfg, sim_cfg)
        return 1
    summary = _summary(traj)
    traj.write_csv(out_dir / "trajectory.csv")
    write_manifest(out_dir / "manifest.ini", cfg, sim_cfg, summary)
    _write_figure_files(out_dir, traj, sim_cfg)
    print(
        f"scenario {sim_cfg.scenario}: {len(traj)} samples over {sim_cfg.t_end} s; "
        f"terminal |o_e| = {summary['terminal_o_e']:.3e} m, "
        f"max |omega_a| = {summary['max_omega_a']:.3f} rad/s, "
        f"settling(|o_e|<{SETTLING_BAND}) = {summary['settling_time']:.3f} s"
    )
    print(f"wrote {out_dir / 'trajectory.csv'} and manifest.ini")
    return 0


def _certificate_inputs(cfg: dict[str, dict[str, str]], args: argparse.Namespace):
    plant = build_plant(cfg)
    gains = build_gains(cfg)
    factor = args.cert_mismatch if args.cert_mismatch is not None else 1.0
    believed = nominal_from_true(plant, factor)
    constants = certificate.derived_constants(believed, args.k_x)
    kappa = args.kappa if args.kappa is not None else certificate.kappa_mid(constants)
    i_max = believed.rolling_inertia
    i_min = i_max - believed.inertia_dip
    return believed, gains, constants, kappa, (i_min, i_max)


def cmd_check_gains(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    _, gains, constants, kappa, (i_min, i_max) = _certificate_inputs(cfg, args)

    if args.sweep is not None:
        name, spec_text = args.sweep
        try:
            start, stop, step = (float(v) for v in spec_text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad sweep range {spec_text!r}, want start:stop:step") from exc
        if name not in ("kp", "kd", "ki"):
            raise ConfigError(f"can only sweep kp, kd or ki, not {name!r}")
        print(f"{name}\tk_i_margin\tk_p_margin\tlambda_min_P\tpassed")
        value = start
        while value <= stop + 1e-12:
            candidate = {
                "kp": Gains(value, gains.k_d, gains.k_i, gains.k_c),
                "kd": Gains(gains.k_p, value, gains.k_i, gains.k_c),
                "ki": Gains(gains.k_p, gains.k_d, value, gains.k_c),
            }[name]
            report = certificate.check_gains(
                candidate, constants.delta, constants.mu, kappa,
                r_const=args.r_const, mu_min=i_min, mu_max=i_max,
            )
            print(
                f"{value:g}\t{report.k_i_margin:.6g}\t{report.k_p_margin:.6g}"
                f"\t{report.p_eigenvalues[0]:.6g}\t{report.passed}"
            )
            value += step
        return 0

    report = certificate.check_gains(
        gains, constants.delta, constants.mu, kappa,
        r_const=args.r_const, mu_min=i_min, mu_max=i_max,
    )
    print(report.serialize())
    return 0 if report.passed else 1


def cmd_equilibrium(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    plant = build_plant(cfg)
    result = actuator_equilibrium(plant)
    print(f"beta_max = {math.degrees(result.beta_max):.4f} deg ({result.beta_max:.6f} rad)")
    if result.theta_a is None:
        print(
            f"no equilibrium: incline {math.degrees(plant.beta):.4f} deg exceeds "
            f"the holdable maximum"
        )
        return 1
    print(
        f"theta_a* = {math.degrees(result.theta_a):.4f} deg ({result.theta_a:.6f} rad)"
    )
    return 0


def _sweep_point(point) -> tuple:
    (k_p, k_d, k_i, delta, mu, kappa, r_const, i_min, i_max) = point
    report = certificate.check_gains(
        Gains(k_p=k_p, k_d=k_d, k_i=k_i), delta, mu, kappa,
        r_const=r_const, mu_min=i_min, mu_max=i_max,
    )
    return (
        k_p, k_d, k_i,
        report.k_i_margin, report.k_p_margin,
        report.p_eigenvalues[0], report.q_eigenvalues[0],
        report.passed and report.p_positive_definite,
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    _, _, constants, kappa, (i_min, i_max) = _certificate_inputs(cfg, args)
    triples = certificate.admissible_gain_sample(
        args.count, args.seed, constants, kappa, r_const=args.r_const,
    )
    points = [
        (g.k_p, g.k_d, g.k_i, constants.delta, constants.mu, kappa,
         args.r_const, i_min, i_max)
        for g in triples
    ]
    if args.jobs > 1:
        with Pool(args.jobs) as pool:
            rows = pool.map(_sweep_point, points)
    else:
        rows = [_sweep_point(point) for point in points]

    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["k_p", "k_d", "k_i", "k_i_margin", "k_p_margin",
             "lambda_min_P", "lambda_min_Q", "certified"]
        )
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    certified = sum(1 for row in rows if row[-1])
    min_lambda_p = min(row[5] for row in rows)
    print(
        f"swept {len(rows)} admissible gain triples (seed {args.seed}): "
        f"{certified} certified, min lambda_min(P_s) = {min_lambda_p:.6g}"
    )
    print(f"wrote {out_path}")
    return 0


def _add_shared_param_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="configuration file (key = value with sections)")
    for flag in ("m-h", "i-h", "r", "m-a", "i-a", "l", "g", "delta-s", "delta-a"):
        sub.add_argument(f"--{flag}", dest=flag.replace("-", "_"), help=argparse.SUPPRESS)
    sub.add_argument("--beta", help="incline angle (radians, or e.g. 20deg)")
    sub.add_argument("--kp", help="proportional gain")
    sub.add_argument("--kd", help="derivative gain")
    sub.add_argument("--ki", help="integral gain")
    sub.add_argument("--kc", help=argparse.SUPPRESS)
    sub.add_argument("--mismatch", help="nominal-parameter scale factor for the controller")


def _add_certificate_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k-x", type=float, default=6.0,
                     help="actuator velocity bound of the certified region (default 6)")
    sub.add_argument("--kappa", type=float, default=None,
                     help="interconnection weight; default is the admissible midpoint")
    sub.add_argument("--r-const", type=float, default=1.0,
                     help="abstract r constant in the k_1/k_2 thresholds (default 1)")
    sub.add_argument("--cert-mismatch", type=float, default=None,
                     help="evaluate the certificate at scaled believed params "
                          "(default: the plant values themselves)")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hooprobot",
        description="Hoop robot on an incline: geometric PID simulation and gain auditing",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a closed-loop scenario, write CSV + manifest")
    _add_shared_param_flags(p_sim)
    p_sim.add_argument("--scenario", choices=SCENARIOS)
    p_sim.add_argument("--o-ref0", dest="o_ref0", help="reference start position")
    p_sim.add_argument("--ramp-v", dest="ramp_v", help="ramp speed (m/s)")
    p_sim.add_argument("--sin-amplitude", dest="sin_amplitude", help="sinusoid velocity amplitude")
    p_sim.add_argument("--sin-rate", dest="sin_rate", help="sinusoid angular rate")
    p_sim.add_argument("--theta0")
    p_sim.add_argument("--o0", help="initial center position (m)")
    p_sim.add_argument("--omega0", help="initial hoop angular velocity")
    p_sim.add_argument("--theta-a0", dest="theta_a0")
    p_sim.add_argument("--omega-a0", dest="omega_a0", help="initial actuator angular velocity")
    p_sim.add_argument("--dt")
    p_sim.add_argument("--t-end", dest="t_end")
    p_sim.add_argument("--stride")
    p_sim.add_argument("--seed")
    p_sim.add_argument("--feedforward", action="store_true",
                       help="add reference-acceleration feedforward (off by default)")
    p_sim.add_argument("--open-loop", dest="open_loop", action="store_true",
                       help="disable the controller entirely (zero input torque)")
    p_sim.add_argument("--hold-dt", dest="hold_dt",
                       help="zero-order-hold period for the torque (default: continuous)")
    p_sim.add_argument("--out", default=".", help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_chk = sub.add_parser("check-gains", help="evaluate the stability gain conditions")
    _add_shared_param_flags(p_chk)
    _add_certificate_flags(p_chk)
    p_chk.add_argument("--sweep", nargs=2, metavar=("PARAM", "START:STOP:STEP"),
                       help="tabulate margins while sweeping kp, kd or ki")
    p_chk.set_defaults(func=cmd_check_gains)

    p_eq = sub.add_parser("equilibrium", help="steady actuator angle and max incline")
    _add_shared_param_flags(p_eq)
    p_eq.set_defaults(func=cmd_equilibrium)

    p_sw = sub.add_parser("sweep", help="seeded sweep of admissible gain triples")
    _add_shared_param_flags(p_sw)
    _add_certificate_flags(p_sw)
    p_sw.add_argument("--count", type=int, default=100)
    p_sw.add_argument("--seed", type=int, default=1)
    p_sw.add_argument("--jobs", type=int, default=1,
                      help="parallel workers for sweep points")
    p_sw.add_argument("--out", default="sweep.csv")
    p_sw.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
