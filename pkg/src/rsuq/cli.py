"""Command-line surface: file encode/decode, channel simulation, bound
tables and the self-test suite.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
Every subcommand is bit-reproducible for a fixed --seed; all numeric
output uses fixed formats with a decimal point and LF line endings.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import bounds as bd
from . import mc
from .coding import (MODE_BALL, FormatError, GolombCode, StreamHeader,
                     coord_width_for_bound, decode_stream, encode_stream,
                     read_vectors, write_header, write_vectors)
from .dither import derive_seed, stream_uniforms
from .lattices import Lattice, builtin_lattice, load_lattice, packing_density
from .layered import GaussianNoise, lrsuq_decode_batch, lrsuq_encode_batch
from .quantizer import RsuqConfig, decode_batch, encode_batch

_BUILTIN_IDS = ("Zn", "Dn", "A2", "E8")


def _seed64(text: str) -> int:
    """Seeds are 64-bit unsigned; other integers wrap, matching the streams."""
    return int(text) & 0xFFFFFFFFFFFFFFFF


def _resolve_lattice(name_or_path: str, n: int) -> Lattice:
    if name_or_path in _BUILTIN_IDS:
        return builtin_lattice(name_or_path, n)
    lat = load_lattice(name_or_path)
    if lat.n != n:
        raise ValueError(f"lattice config has dimension {lat.n}, expected {n}")
    return lat


def _read_file(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write_file(path, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)


# -- encode / decode -----------------------------------------------------------


def cmd_encode(args) -> int:
    X = read_vectors(_read_file(args.input))
    if X.shape[1] != args.dim:
        raise ValueError(f"input file has dimension {X.shape[1]}, expected {args.dim}")
    lat = _resolve_lattice(args.lattice, args.dim)
    cfg = RsuqConfig(lat, r=args.radius, seed=args.seed)
    K, J, _ = encode_batch(cfg, X)
    bound = int(np.abs(J).max()) if J.size else 0
    header = StreamHeader(n=args.dim, lattice_id=lat.name, gamma=cfg.gamma,
                          param=args.radius, mode=MODE_BALL, seed=args.seed,
                          count=len(X), coord_bound=bound)
    blob = encode_stream(header, zip(K, J), lat=lat)
    _write_file(args.output, blob)
    payload_bits = 8 * (len(blob) - len(write_header(header)))
    print(f"vectors={len(X)} dim={args.dim} lattice={lat.name} "
          f"radius={args.radius:.6g} seed={args.seed}")
    if len(X):
        est = mc.rate_from_descriptions(lat, K, J)
        rate = est.mean_code_len / args.dim
        hbound = (bd.geometric_entropy(packing_density(lat)) + 1.0
                  + args.dim * coord_width_for_bound(bound)) / args.dim
        lb = bd.rd_lower_max_error(args.dim, args.radius) / args.dim
        print(f"rate_bits_per_dim={rate:.6f}")
        print(f"rate_bound_bits_per_dim={hbound:.6f}")
        print(f"max_error_lb_bits_per_dim={lb:.6f}")
    print(f"stream_bytes={len(blob)} payload_bits={payload_bits}")
    return 0


def cmd_decode(args) -> int:
    lat = load_lattice(args.lattice) if args.lattice else None
    header, K, J = decode_stream(_read_file(args.input), lat=lat)
    if lat is None:
        lat = builtin_lattice(header.lattice_id, header.n)
    if len(K) == 0:
        Y = np.zeros((0, header.n))
    elif header.mode == MODE_BALL:
        cfg = RsuqConfig(lat, r=header.param, seed=header.seed)
        Y = decode_batch(cfg, K, J)
    else:
        noise = GaussianNoise(header.n, lat)
        Y = lrsuq_decode_batch(noise, lat, header.seed, K, J)
    _write_file(args.output, write_vectors(Y))
    print(f"vectors={len(K)} dim={header.n} lattice={header.lattice_id} "
          f"mode={header.mode} seed={header.seed}")
    return 0


def cmd_simulate(args) -> int:
    if args.noise != "gaussian":
        raise ValueError(f"unknown noise model {args.noise!r}")
    X = read_vectors(_read_file(args.input))
    if X.shape[1] != args.dim:
        raise ValueError(f"input file has dimension {X.shape[1]}, expected {args.dim}")
    lat = _resolve_lattice(args.lattice, args.dim)
    noise = GaussianNoise(args.dim, lat)
    if len(X):
        K, J, Y, _ = lrsuq_encode_batch(noise, lat, args.seed, X)
        est = mc.rate_from_descriptions(lat, K, J)
        rate = est.mean_code_len / args.dim
    else:
        Y = np.zeros((0, args.dim))
        rate = 0.0
    _write_file(args.output, write_vectors(Y))
    print(f"vectors={len(X)} dim={args.dim} lattice={lat.name} "
          f"noise={args.noise} seed={args.seed}")
    print(f"rate_bits_per_dim={rate:.6f}")
    return 0


# -- bounds tables ---------------------------------------------------------------


def _parse_dims(text: str):
    dims = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            dims.extend(range(int(a), int(b) + 1))
        elif part:
            dims.append(int(part))
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"bad dimension range {text!r}")
    return dims


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Reads {csv} (long format: n,quantity,value_bits,equation_tag) and plots
# one log-scale line per quantity.
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open({csv!r}) as fh:
    for row in csv.DictReader(fh):
        series[row["quantity"]].append((int(row["n"]), float(row["value_bits"])))
fig, ax = plt.subplots(figsize=(7, 4.5))
for name, pts in sorted(series.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=name)
ax.set_xlabel("dimension n")
ax.set_ylabel("bits / dimension")
ax.set_yscale("log")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
"""


def cmd_bounds(args) -> int:
    registry = bd.load_registry(args.registry)
    dims = _parse_dims(args.dims) if args.dims else None
    missing = []
    if args.table == "table1":
        dims = dims or list(range(1, 9)) + [24]
        report = bd.table_layered_gaussian(dims)
    elif args.table == "figure2-left":
        dims = dims or list(range(1, 49))
        report, missing = bd.table_max_error_redundancy(dims, registry)
    elif args.table == "figure2-right":
        dims = dims or list(range(1, 49))
        report, missing = bd.table_mse_redundancy(dims, registry)
    else:
        raise ValueError(f"unknown table {args.table!r}")
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(report.to_csv())
    if missing:
        print("warning: registry has no entries for dimensions "
              + ",".join(str(n) for n in missing), file=sys.stderr)
    print(f"table={args.table} rows={len(report.rows)} out={args.out}")
    if args.table.startswith("figure2"):
        script = _PLOT_SCRIPT.format(csv=str(args.out), png=str(args.out) + ".png")
        with open(str(args.out) + ".plot.py", "w", encoding="ascii", newline="\n") as fh:
            fh.write(script)
        print(f"plot_script={args.out}.plot.py")
    return 0


# -- selftest ---------------------------------------------------------------------


def _selftest_checks(seed: int, full: bool):
    """Yield (name, TestResult-or-(value, lo, hi)) verification records."""
    n_small = 100000 if full else 20000
    n_big = 200000 if full else 30000
    z2 = builtin_lattice("Zn", 2)
    e8 = builtin_lattice("E8", 8)
    a2 = builtin_lattice("A2", 2)
    d4 = builtin_lattice("Dn", 4)

    # closed-form table reproduction
    expected = {1: 1.52632, 8: 14.71250, 24: 46.71338}
    for n, want in expected.items():
        got = bd.gaussian_layered_entropy(n)
        yield (f"layered-entropy[n={n}]",
               mc.TestResult(test=f"layered-entropy[n={n}]", statistic=got,
                             threshold=1e-4, p_value=None,
                             verdict=abs(got - want) < 1e-4, n_samples=0, seed=seed))

    ordering = bd.rsuq_red_per_dim(48) < bd.ordentlich_ub(48)
    yield ("redundancy-ordering[n=48]",
           mc.TestResult(test="redundancy-ordering[n=48]",
                         statistic=bd.rsuq_red_per_dim(48),
                         threshold=bd.ordentlich_ub(48), p_value=None,
                         verdict=ordering, n_samples=0, seed=seed))

    # ball-error law, MSE, stopping index
    cfg = RsuqConfig(z2, r=0.5, seed=derive_seed(seed, 1))
    plan = mc.TrialPlan(samples=n_small, tau=50.0, seed_base=derive_seed(seed, 2))
    X, Z = mc.error_batch(cfg, plan)
    yield ("uniform-ball", mc.test_uniform_ball(Z, 0.5, 2, seed=seed))
    yield ("independence", mc.test_independence(X, Z, seed=seed))
    mse = float(np.einsum("ij,ij->i", Z, Z).mean())
    yield ("mse[Z2]", mc.TestResult(test="mse[Z2]", statistic=mse, threshold=0.125,
                                    p_value=None, verdict=abs(mse - 0.125) < 0.00125,
                                    n_samples=n_small, seed=seed))
    mean_k, kres = mc.k_statistics(cfg, plan)
    yield ("stopping-index[Z2]", kres)
    want = 4.0 / math.pi
    yield ("mean-k[Z2]", mc.TestResult(test="mean-k[Z2]", statistic=mean_k,
                                       threshold=want, p_value=None,
                                       verdict=abs(mean_k - want) / want < 0.02,
                                       n_samples=n_small, seed=seed))

    # rate bound across lattices
    lats = [z2, a2, d4] if full else [z2]
    for lat in lats:
        cfg_l = RsuqConfig(lat, r=0.5, seed=derive_seed(seed, 3))
        plan_l = mc.TrialPlan(samples=n_small, tau=50.0,
                              seed_base=derive_seed(seed, 4))
        yield (f"rate-bound[{lat.name}]", mc.rsuq_rate_check(cfg_l, plan_l))

    if full:
        cfg8 = RsuqConfig(e8, r=e8.packing_radius, seed=derive_seed(seed, 5))
        plan8 = mc.TrialPlan(samples=n_small, tau=50.0,
                             seed_base=derive_seed(seed, 6))
        mean_k8, kres8 = mc.k_statistics(cfg8, plan8)
        yield ("stopping-index[E8]", kres8)
        want8 = 384.0 / math.pi ** 4
        yield ("mean-k[E8]", mc.TestResult(test="mean-k[E8]", statistic=mean_k8,
                                           threshold=want8, p_value=None,
                                           verdict=abs(mean_k8 - want8) / want8 < 0.02,
                                           n_samples=n_small, seed=seed))

    # Gaussian channel simulation
    g = GaussianNoise(2, z2)
    plan_g = mc.TrialPlan(samples=n_big, tau=50.0, seed_base=derive_seed(seed, 7))
    _, Zg, _ = mc.lrsuq_error_batch(g, z2, derive_seed(seed, 8), plan_g)
    yield ("gaussian-sim", mc.test_gaussian(Zg, 2, seed=seed))

    # coding layer
    code = GolombCode.for_geometric(0.5)
    u = stream_uniforms([derive_seed(seed, 9)], 0, n_small)[0]
    k = np.floor(np.log1p(-u) / math.log(0.5)).astype(np.int64) + 1
    mean_len = float(code.length(k).mean())
    hk = bd.geometric_entropy(0.5)
    yield ("golomb-rate[p=0.5]",
           mc.TestResult(test="golomb-rate[p=0.5]", statistic=mean_len,
                         threshold=hk + 1.0, p_value=None,
                         verdict=mean_len <= hk + 1.0, n_samples=n_small, seed=seed))


def cmd_selftest(args) -> int:
    results = []
    for name, res in _selftest_checks(args.seed, full=args.full):
        results.append(res)
        status = "PASS" if res.verdict else "FAIL"
        print(f"{status} {name} statistic={res.statistic:.6g} "
              f"threshold={res.threshold:.6g} samples={res.n_samples}")
        for sub in res.subresults:
            substat = "pass" if sub.verdict else "fail"
            print(f"  - {substat} {sub.test} statistic={sub.statistic:.6g} "
                  f"threshold={sub.threshold:.6g}")
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(mc.TestResult.CSV_HEADER + "\n")
            for res in results:
                fh.write(res.csv_row() + "\n")
    failures = sum(not r.verdict for r in results)
    print(f"checks={len(results)} failures={failures}")
    return 1 if failures else 0


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsuq",
                                description="Rejection-sampled universal quantization toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode a VQF1 vector file into an RSQ1 stream")
    enc.add_argument("--input", required=True)
    enc.add_argument("--lattice", required=True, help="builtin id or config path")
    enc.add_argument("--dim", type=int, required=True)
    enc.add_argument("--radius", type=float, required=True)
    enc.add_argument("--seed", type=_seed64, default=0)
    enc.add_argument("--output", required=True)
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="decode an RSQ1 stream back to vectors")
    dec.add_argument("--input", required=True)
    dec.add_argument("--output", required=True)
    dec.add_argument("--lattice", help="config path for non-builtin lattices")
    dec.set_defaults(func=cmd_decode)

    sim = sub.add_parser("simulate", help="one-shot additive-noise channel simulation")
    sim.add_argument("--noise", default="gaussian")
    sim.add_argument("--dim", type=int, required=True)
    sim.add_argument("--lattice", default="Zn")
    sim.add_argument("--seed", type=_seed64, default=0)
    sim.add_argument("--input", required=True)
    sim.add_argument("--output", required=True)
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bounds", help="emit closed-form bound tables as CSV")
    bnd.add_argument("--table", required=True,
                     choices=("figure2-left", "figure2-right", "table1"))
    bnd.add_argument("--dims", help="range a..b and/or comma list, e.g. 1..8,24")
    bnd.add_argument("--registry", help="extra registry CSV")
    bnd.add_argument("--out", required=True)
    bnd.set_defaults(func=cmd_bounds)

    st = sub.add_parser("selftest", help="run the verification suite")
    mode = st.add_mutually_exclusive_group()
    mode.add_argument("--quick", dest="full", action="store_false")
    mode.add_argument("--full", dest="full", action="store_true")
    st.set_defaults(full=False)
    st.add_argument("--seed", type=_seed64, default=0)
    st.add_argument("--out", help="write TestResult CSV rows here")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
