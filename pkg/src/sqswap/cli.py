"""Batch driver: every experiment as a reproducible subcommand emitting CSV.

Each subcommand resolves its parameters (flags > config file > defaults),
runs the requested computation and writes one or more CSV files, each
accompanied by a JSON manifest holding the resolved parameters, the seed,
the tool version and a SHA-256 digest of the CSV.  Numeric cells use
repr() round-trip formatting, so reruns are byte identical.

Exit codes: 0 ok, 2 usage error, 3 compute error.
"""

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

import sqswap
from sqswap import gaussian
from sqswap import optimizer as optz
from sqswap import protocol as proto
from sqswap.estimation import NoiseConfig, clock_experiment, differential_experiment
from sqswap.fock import ProtocolConfig, SqswapError, StateVector, _phase_z, apply_mode_swap, build_basis, evolve_squeezing, prepare_initial

USAGE_ERROR = 2
COMPUTE_ERROR = 3


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    data = ("\n".join(lines) + "\n").encode("utf-8")
    path = Path(path)
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def write_manifest(csv_path, subcommand, params, seed, digest):
    manifest = {
        "subcommand": subcommand,
        "params": {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                   for k, v in sorted(params.items())},
        "seed": seed,
        "version": sqswap.__version__,
        "outputs": {Path(csv_path).name: f"sha256:{digest}"},
    }
    out = Path(csv_path).with_suffix(".manifest.json")
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parallel_map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _add_shared(p):
    p.add_argument("--n", type=int, default=None, help="total atom number")
    p.add_argument("--tau", type=str, default=None,
                   help="squeezing strength(s) tau_E / tau_ref (comma separated where scanned)")
    p.add_argument("--nu", type=float, default=None,
                   help="state orientation nu_E in rad (default: optimized where relevant)")
    p.add_argument("--theta-ms", type=float, default=None, help="mode-swap strength (rad)")
    p.add_argument("--phi-ms", type=float, default=None, help="mode-swap phase (rad)")
    p.add_argument("--generator", choices=["oat", "tat"], default=None)
    p.add_argument("--msep", action="store_true", default=None,
                   help="mode-separable reference instead of the swapped protocol")
    p.add_argument("--tau-a", type=float, default=None, help="msep squeezing tau_S_A / tau_ref")
    p.add_argument("--tau-b", type=float, default=None, help="msep squeezing tau_S_B / tau_ref")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--config", type=str, default=None, help="flat JSON with flag defaults")


DEFAULTS = {
    "n": 100,
    "tau": "0.0",
    "nu": None,
    "theta_ms": np.pi / 2,
    "phi_ms": np.pi / 2,
    "generator": "oat",
    "msep": False,
    "tau_a": None,
    "tau_b": 0.0,
    "shots": 100_000,
    "seed": 42,
    "threads": 1,
    "out": ".",
    "points": 25,
    "tau_max": 1.2,
    "res": 64,
    "nu_points": 48,
    "phi_points": 32,
    "lam": "0.1",
    "sigma": "0.0",
    "gamma": 1.0,
    "omega0": 1.0,
    "ttot": 1.0,
    "t_list": "",
    "coherent": False,
    "scatter_shots": 20_000,
    "free": "nu_E,phi_MS",
    "budget": 6000,
    "engine": "exact",
}


def resolve(args):
    """Merge flag values over config-file values over defaults."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in merged:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


class UsageError(SqswapError):
    pass


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v != ""]
    except ValueError:
        raise UsageError(f"bad numeric list: {text!r}")


def _base_config(p, tau_ratio=0.0, nu=0.0):
    tau_ref = optz.tau_ref(p["n"], p["generator"])
    return ProtocolConfig(
        N=p["n"],
        tau_E=tau_ratio * tau_ref,
        nu_E=nu,
        theta_MS=p["theta_ms"],
        phi_MS=p["phi_ms"],
        generator=p["generator"],
    )


def _mepe_kernel_at(basis, psi_twisted, nu, theta_ms, phi_ms):
    st = StateVector(basis, psi_twisted.amplitudes.copy())
    _phase_z(st, "ab", nu)
    st = apply_mode_swap(st, theta_ms, phi_ms)
    return proto.fringe_kernel(st)


def _optimized_nu(basis, psi_twisted, theta_ms, phi_ms, scan=96):
    def neg(nu):
        return -_mepe_kernel_at(basis, psi_twisted, nu, theta_ms, phi_ms).gain(np.pi / 2, np.pi / 2)

    nus = np.arange(scan) * (4 * np.pi / scan)
    vals = [neg(v) for v in nus]
    i = int(np.argmin(vals))
    step = 4 * np.pi / scan
    return optz.golden_section(neg, nus[i] - step, nus[i] + step, tol=1e-7) % (4 * np.pi)


def cmd_gain_scan(p):
    n = p["n"]
    basis = build_basis(n)
    tau_ref = optz.tau_ref(n, p["generator"])
    ratios = np.linspace(0.0, p["tau_max"], p["points"])
    psi1 = prepare_initial(basis)
    msep = bool(p["msep"])

    def one(ratio):
        tau = ratio * tau_ref
        r = gaussian.squeezing_from_tau(n, tau)
        if msep:
            tau_a = (p["tau_a"] if p["tau_a"] is not None else ratio) * tau_ref
            tau_b = p["tau_b"] * tau_ref
            cfg = ProtocolConfig(N=n, generator=p["generator"], tau_S_A=tau_a, tau_S_B=tau_b)
            rep = proto.run_separable(cfg)
            gain = rep.gain
            if p["generator"] == "oat" and p["tau_b"] == 0.0:
                r_a = gaussian.squeezing_from_tau(n, tau_a)
                ns = np.sinh(r_a) ** 2
                gain_analytic = 2.0 / (1.0 + np.exp(-2 * r_a) + 2 * ns / n)
            else:
                gain_analytic = float("nan")
            bw = float("nan")
        else:
            psi_tw = evolve_squeezing(psi1, p["generator"], tau, 0.0)
            nu = p["nu"]
            if nu is None:
                nu = 0.0 if tau == 0 else _optimized_nu(basis, psi_tw, p["theta_ms"], p["phi_ms"])
            kernel = _mepe_kernel_at(basis, psi_tw, nu, p["theta_ms"], p["phi_ms"])
            gain = kernel.gain(np.pi / 2, np.pi / 2)
            if p["generator"] == "oat":
                import warnings

                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", gaussian.ValidityWarning)
                    gain_analytic = float(gaussian.gain_analytic(n, r))
            else:
                gain_analytic = float("nan")
            bw = proto.bandwidth(None, p["res"], kernel=kernel)
        return [ratio, gain, gain_analytic, bw]

    rows = _parallel_map(one, ratios, p["threads"])
    out = Path(p["out"]) / "gain_scan.csv"
    digest = write_csv(out, ["tau_over_tauref", "gain_exact", "gain_analytic", "bandwidth"], rows)
    write_manifest(out, "gain-scan", p, p["seed"], digest)
    return 0


def cmd_ms_scan(p):
    n = p["n"]
    basis = build_basis(n)
    tau_ref = optz.tau_ref(n, p["generator"])
    ratios = _floats(p["tau"])
    tau = ratios[0] * tau_ref
    psi1 = prepare_initial(basis)
    psi_tw = evolve_squeezing(psi1, p["generator"], tau, 0.0)
    nus = np.linspace(0, 4 * np.pi, p["nu_points"], endpoint=False)
    phis = np.linspace(-np.pi / 2, np.pi / 2, p["phi_points"], endpoint=False)

    def one(nu):
        return [
            [nu, phi, _mepe_kernel_at(basis, psi_tw, nu, p["theta_ms"], phi).gain(np.pi / 2, np.pi / 2)]
            for phi in phis
        ]

    rows = [row for chunk in _parallel_map(one, nus, p["threads"]) for row in chunk]
    out = Path(p["out"]) / "ms_scan.csv"
    digest = write_csv(out, ["nu", "phi_ms", "gain"], rows)
    write_manifest(out, "ms-scan", p, p["seed"], digest)
    return 0


def cmd_bandwidth(p):
    n = p["n"]
    basis = build_basis(n)
    tau_ref = optz.tau_ref(n, p["generator"])
    ratios = np.linspace(0.0, p["tau_max"], p["points"])
    psi1 = prepare_initial(basis)

    def one(ratio):
        psi_tw = evolve_squeezing(psi1, p["generator"], ratio * tau_ref, 0.0)
        nu = p["nu"]
        if nu is None:
            nu = 0.0 if ratio == 0 else _optimized_nu(basis, psi_tw, p["theta_ms"], p["phi_ms"])
        kernel = _mepe_kernel_at(basis, psi_tw, nu, p["theta_ms"], p["phi_ms"])
        return [ratio, proto.bandwidth(None, p["res"], kernel=kernel)]

    rows = _parallel_map(one, ratios, p["threads"])
    out = Path(p["out"]) / "bandwidth.csv"
    digest = write_csv(out, ["tau_over_tauref", "bandwidth"], rows)
    write_manifest(out, "bandwidth", p, p["seed"], digest)
    return 0


def cmd_avg_gain(p):
    n = p["n"]
    tau_ref = optz.tau_ref(n, p["generator"])
    ratio = _floats(p["tau"])[0]
    tau = ratio * tau_ref
    lambdas = _floats(p["lam"])
    if p["engine"] == "gaussian":
        r = gaussian.squeezing_from_tau(n, tau)
        nu = p["nu"] if p["nu"] is not None else optz.nu_min_numeric(p["phi_ms"] - np.pi / 2, max(r, 1e-9))
        gcfg = gaussian.GaussianConfig.for_protocol(
            n, r=r, nu_E=nu, theta_MS=p["theta_ms"], phi_MS=p["phi_ms"])

        def gain_fn(phi):
            return gaussian.gain_surface(gcfg, n, np.pi / 2 + phi, np.pi / 2 + phi)
    else:
        basis = build_basis(n)
        psi_tw = evolve_squeezing(prepare_initial(basis), p["generator"], tau, 0.0)
        nu = p["nu"] if p["nu"] is not None else _optimized_nu(basis, psi_tw, p["theta_ms"], p["phi_ms"])
        kernel = _mepe_kernel_at(basis, psi_tw, nu, p["theta_ms"], p["phi_ms"])

        def gain_fn(phi):
            return kernel.gain(np.pi / 2 + phi, np.pi / 2 + phi)

    rows = []
    for lam in lambdas:
        phi = (np.arange(201) + 0.5) / 201 * 2 * lam - lam
        g = float(np.mean(gain_fn(phi)))
        rows.append([lam, g, 10 * np.log10(g)])
    out = Path(p["out"]) / "avg_gain.csv"
    digest = write_csv(out, ["lambda_pn", "avg_gain", "avg_gain_db"], rows)
    write_manifest(out, "avg-gain", p, p["seed"], digest)
    return 0


def _estimation_config(p, basis):
    """Protocol config for the estimation commands, optimizing nu if unset."""
    tau_ref = optz.tau_ref(p["n"], p["generator"])
    ratio = _floats(p["tau"])[0]
    tau = ratio * tau_ref
    if bool(p["msep"]):
        tau_a = (p["tau_a"] if p["tau_a"] is not None else ratio) * tau_ref
        return ProtocolConfig(
            N=p["n"], generator=p["generator"],
            tau_S_A=tau_a, tau_S_B=p["tau_b"] * tau_ref), "msep"
    nu = p["nu"]
    if nu is None and tau > 0:
        psi_tw = evolve_squeezing(prepare_initial(basis), p["generator"], tau, 0.0)
        nu = _optimized_nu(basis, psi_tw, p["theta_ms"], p["phi_ms"])
    return ProtocolConfig(
        N=p["n"], tau_E=tau, nu_E=nu or 0.0, theta_MS=p["theta_ms"],
        phi_MS=p["phi_ms"], generator=p["generator"]), "mepe"


def cmd_estimate(p):
    basis = build_basis(p["n"])
    config, scheme = _estimation_config(p, basis)
    sigmas = _floats(p["sigma"])
    rows = []
    scatter_rows = []
    for i, sigma in enumerate(sigmas):
        noise = NoiseConfig(sigma_pn=sigma, shots=p["shots"], seed=p["seed"] + i)
        res = differential_experiment(config, noise, scheme=scheme,
                                      basis=basis if scheme == "mepe" else None)
        rows.append([sigma, res.var_diff, res.var_diff / (4.0 / p["n"]), res.mean_diff, p["shots"]])
        if i == 0:
            keep = min(p["scatter_shots"], p["shots"])
            scatter_rows = np.column_stack([res.theta_est_A[:keep], res.theta_est_B[:keep]])
    out = Path(p["out"]) / "estimate.csv"
    digest = write_csv(out, ["sigma_pn", "var_diff", "var_over_sql", "mean_diff", "shots"], rows)
    write_manifest(out, "estimate", p, p["seed"], digest)
    scat = Path(p["out"]) / "estimate_scatter.csv"
    digest2 = write_csv(scat, ["theta_est_a", "theta_est_b"], scatter_rows)
    write_manifest(scat, "estimate", p, p["seed"], digest2)
    return 0


def cmd_clock(p):
    basis = build_basis(p["n"])
    if p["coherent"]:
        config = ProtocolConfig(N=p["n"], generator=p["generator"])
        scheme = "msep"
    else:
        config, scheme = _estimation_config(p, basis)
    noise = NoiseConfig(gamma_LO=p["gamma"], T_tot=p["ttot"], omega_0=p["omega0"],
                        shots=p["shots"], seed=p["seed"])
    t_values = np.array(_floats(p["t_list"])) if p["t_list"] else None
    res = clock_experiment(config, noise, t_values=t_values, scheme=scheme,
                           basis=basis if scheme == "mepe" else None)
    floor = 4.0 / (p["omega0"] ** 2 * p["n"] ** 1.5 * res.t * p["ttot"])
    rows = [
        [t, p["gamma"] * t, vf, vs, fl]
        for t, vf, vs, fl in zip(res.t, res.var_frac, res.var_sql, floor)
    ]
    out = Path(p["out"]) / "clock.csv"
    digest = write_csv(out, ["t", "gamma_lo_t", "var_frac", "var_sql", "var_floor_n32"], rows)
    write_manifest(out, "clock", p, p["seed"], digest)
    return 0


def cmd_optimize(p):
    free = tuple(v.strip() for v in p["free"].split(",") if v.strip())
    tau_ref = optz.tau_ref(p["n"], p["generator"])
    config = _base_config(p, tau_ratio=_floats(p["tau"])[0], nu=p["nu"] or 0.0)
    result = optz.optimize_protocol(config, free_params=free, budget=p["budget"])
    rows = [[
        result.nu_opt, result.phi_ms_opt, result.theta_ms_opt,
        result.tau_opt / tau_ref if tau_ref else result.tau_opt,
        result.gain_at_opt, 10 * np.log10(result.gain_at_opt), result.method,
    ]]
    out = Path(p["out"]) / "optimize.csv"
    digest = write_csv(
        out,
        ["nu_opt", "phi_ms_opt", "theta_ms_opt", "tau_opt_over_tauref", "gain", "gain_db", "method"],
        rows,
    )
    write_manifest(out, "optimize", p, p["seed"], digest)
    return 0


COMMANDS = {
    "gain-scan": cmd_gain_scan,
    "ms-scan": cmd_ms_scan,
    "bandwidth": cmd_bandwidth,
    "avg-gain": cmd_avg_gain,
    "estimate": cmd_estimate,
    "clock": cmd_clock,
    "optimize": cmd_optimize,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="sqswap", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    specs = {
        "gain-scan": [("--points", int), ("--tau-max", float), ("--res", int)],
        "ms-scan": [("--nu-points", int), ("--phi-points", int)],
        "bandwidth": [("--points", int), ("--tau-max", float), ("--res", int)],
        "avg-gain": [("--lambda", str), ("--engine", str)],
        "estimate": [("--sigma", str), ("--scatter-shots", int)],
        "clock": [("--gamma", float), ("--omega0", float), ("--ttot", float),
                  ("--t-list", str), ("--coherent", None)],
        "optimize": [("--free", str), ("--budget", int)],
    }
    for name, extras in specs.items():
        p = sub.add_parser(name)
        _add_shared(p)
        for flag, typ in extras:
            if typ is None:
                p.add_argument(flag, action="store_true", default=None)
            elif flag == "--engine":
                p.add_argument(flag, choices=["exact", "gaussian"], default=None)
            elif flag == "--lambda":
                p.add_argument(flag, type=typ, default=None, dest="lam")
            else:
                p.add_argument(flag, type=typ, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_ERROR
    try:
        params = resolve(args)
        Path(params["out"]).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.subcommand](params)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (SqswapError, ValueError) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return COMPUTE_ERROR


if __name__ == "__main__":
    sys.exit(main())
