"""Command-line front end: experiment runners, model utilities, selftest.

Exit codes: 0 success, 1 configuration error, 2 selftest failure. A
`--config file` of key=value lines overrides flags of the same name.
Every CSV starts with a one-line manifest comment (tool version,
subcommand, resolved settings) so a run can be replayed exactly.
"""

import argparse
import sys

import numpy as np

__version__ = "0.1.0"


class _ConfigError(Exception):
    def __init__(self, message, usage_shown=False):
        super().__init__(message)
        self.usage_shown = usage_shown


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise _ConfigError(message, usage_shown=True)


def _csv_floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v != ""]
    except ValueError:
        raise _ConfigError("bad numeric list %r" % (text,))


def _csv_ints(text):
    try:
        return [int(v) for v in str(text).split(",") if v != ""]
    except ValueError:
        raise _ConfigError("bad integer list %r" % (text,))


def build_parser():
    p = _Parser(prog="trellis", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version="trellis " + __version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, trials, n):
        sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--n", type=int, default=n)
        sp.add_argument("--out", default=None, help="CSV path (default: stdout)")
        sp.add_argument("--plot-data", dest="plot_data", default=None,
                        help="also write a long-format CSV here")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--chunk", type=int, default=500)
        sp.add_argument("--config", default=None, help="key=value file overriding flags")

    sp = sub.add_parser("hmc-awgn", help="symbol detection over a memoryless Gaussian channel")
    common(sp, trials=1000, n=1000)
    sp.add_argument("--scenario", default="awgn", choices=["awgn"])
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--ebn0", default="6,10,14", help="comma list of dB values")
    sp.add_argument("--methods", default="ml,fb,va,vb,fcvb")
    sp.add_argument("--xi", type=float, default=0.01)
    sp.add_argument("--max-cycles", dest="max_cycles", type=int, default=100)

    sp = sub.add_parser("hmc-fading", help="symbol detection over quantized Rayleigh fading")
    common(sp, trials=1000, n=1000)
    sp.add_argument("--scenario", default="fading", choices=["fading"])
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--k", type=int, default=8)
    sp.add_argument("--ebn0", default="30")
    sp.add_argument("--rho", default=None, help="comma list of gain correlations")
    sp.add_argument("--fdts", default=None, help="comma list of normalized Doppler values")
    sp.add_argument("--sigma2", type=float, default=0.5)
    sp.add_argument("--methods", default="ml,fb,va,vb,fcvb")
    sp.add_argument("--xi", type=float, default=0.01)
    sp.add_argument("--max-cycles", dest="max_cycles", type=int, default=100)

    sp = sub.add_parser("freq", help="single-tone frequency estimation RMS sweep")
    common(sp, trials=10000, n=64)
    sp.set_defaults(chunk=2000)
    sp.add_argument("--ebn0", default="5,15", help="comma list of SNR-per-bit dB values")
    sp.add_argument("--omega-bins", dest="omega_bins", type=float, default=1.1)
    sp.add_argument("--pad", type=int, default=8)
    sp.add_argument("--cycles", type=int, default=5)
    sp.add_argument("--mu-a", dest="mu_a", type=float, default=1.0)
    sp.add_argument("--r-a", dest="r_a", type=float, default=0.1)
    sp.add_argument("--methods", default="periodogram,pm,map,vb,tvb")

    sp = sub.add_parser("gdl-count", help="factor-model partitions and operator counts")
    sp.add_argument("--model", required=True, help="model file (header 'm M n')")
    sp.add_argument("--keep", default="", help="comma list of variables to keep")
    sp.add_argument("--split", type=int, default=None)
    sp.add_argument("--semiring", default="sum-product")
    sp.add_argument("--mode", default="both", choices=["fb", "naive", "both"])
    sp.add_argument("--config", default=None)

    sp = sub.add_parser("pe-demo", help="factored-approximation divergences of the quartic bivariate")
    sp.add_argument("--rho", default="0.2,0.5,0.8")
    sp.add_argument("--transform", default="eigen", choices=["eigen", "ldu"])
    sp.add_argument("--out", default=None)
    sp.add_argument("--config", default=None)

    sub.add_parser("selftest", help="small-instance oracle equivalence suite")
    return p


def _apply_config(args):
    if getattr(args, "config", None) is None:
        return
    try:
        with open(args.config) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise _ConfigError("cannot read config file: %s" % e)
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _ConfigError("config line %d is not key=value" % ln)
        key, val = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if not hasattr(args, dest) or dest in ("cmd", "config"):
            raise _ConfigError("unknown config key %r" % key)
        cur = getattr(args, dest)
        if isinstance(cur, bool):
            setattr(args, dest, val.lower() in ("1", "true", "yes"))
        elif isinstance(cur, int):
            setattr(args, dest, int(val))
        elif isinstance(cur, float):
            setattr(args, dest, float(val))
        else:
            setattr(args, dest, val)


def _manifest(args, skip=("config", "plot_data")):
    pairs = ["tool=trellis-" + __version__, "cmd=" + args.cmd]
    for key in sorted(vars(args)):
        if key in skip or key == "cmd":
            continue
        val = getattr(args, key)
        pairs.append("%s=%s" % (key, "-" if val is None else val))
    return " ".join(pairs)


def _require_seed(args):
    if args.seed is None:
        raise _ConfigError("--seed is required for experiment runs")


def _sort_key(row):
    return (
        row["scenario"], row["M"], row["K"] or 0, row["ebn0_db"],
        row["rho"] if row["rho"] is not None else -1.0, row["n"],
        row["trials"], row["method"],
    )


def _write_plot_data(path, rows, x_field, metrics):
    from .experiments import write_csv

    long_rows = []
    for row in rows:
        for metric in metrics:
            if row.get(metric) is None:
                continue
            long_rows.append({
                "method": row["method"], "x_name": x_field,
                "x_value": row[x_field], "metric": metric,
                "value": row[metric],
            })
    write_csv(path, ["method", "x_name", "x_value", "metric", "value"], long_rows)


def _cmd_hmc(args):
    from .channel import rho_from_doppler
    from .experiments import ExperimentConfig, HMC_CSV_HEADER, run_experiment, write_csv

    _require_seed(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    ebn0s = _csv_floats(args.ebn0)
    if args.cmd == "hmc-fading":
        if args.rho is not None:
            rhos = _csv_floats(args.rho)
        elif args.fdts is not None:
            rhos = [rho_from_doppler(f) for f in _csv_floats(args.fdts)]
        else:
            raise _ConfigError("hmc-fading needs --rho or --fdts")
        K = args.k
        sigma2 = args.sigma2
    else:
        rhos = [None]
        K = 1
        sigma2 = 0.5
    rows = []
    try:
        for e in ebn0s:
            for rho in rhos:
                cfg = ExperimentConfig(
                    scenario=args.scenario, M=args.m, K=K, ebn0_db=e, rho=rho,
                    n=args.n, trials=args.trials, seed=args.seed, methods=methods,
                    xi=args.xi, max_cycles=args.max_cycles, chunk=args.chunk,
                    jobs=args.jobs, sigma2=sigma2)
                rows.extend(run_experiment(cfg))
    except ValueError as e:
        raise _ConfigError(str(e))
    rows.sort(key=_sort_key)
    write_csv(args.out, HMC_CSV_HEADER, rows, _manifest(args))
    if args.plot_data:
        x = "rho" if args.cmd == "hmc-fading" and len(rhos) > 1 else "ebn0_db"
        _write_plot_data(args.plot_data, rows, x,
                         ["ber", "ber_ci95", "nu_c_mean", "nu_e_mean", "kld_mean", "wall_ms"])
    return 0


def _cmd_freq(args):
    from .experiments import FREQ_CSV_HEADER, run_freq_experiment, write_csv

    _require_seed(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    rows = []
    try:
        for snr in _csv_floats(args.ebn0):
            rows.extend(run_freq_experiment(
                n=args.n, snr_db=snr, trials=args.trials, seed=args.seed,
                omega_bins=args.omega_bins, pad=args.pad, cycles=args.cycles,
                mu_a=args.mu_a, r_a=args.r_a, methods=methods,
                chunk=args.chunk, jobs=args.jobs))
    except ValueError as e:
        raise _ConfigError(str(e))
    rows.sort(key=lambda r: (r["snr_db"], r["n"], r["omega_bins"], r["method"]))
    write_csv(args.out, FREQ_CSV_HEADER, rows, _manifest(args))
    if args.plot_data:
        _write_plot_data(args.plot_data, rows, "snr_db", ["rms_bins"])
    return 0


def _format_sets(tag_fmt, sets):
    parts = []
    for i, s in enumerate(sets, 1):
        inner = ",".join(str(v) for v in sorted(s))
        parts.append(tag_fmt % i + "={" + inner + "}")
    return " ".join(parts)


def _cmd_gdl_count(args):
    from .factors import fa_partition, load_model, nln_partition
    from .gdl import count_operators, default_split
    from .semiring import ALL_SEMIRINGS

    if args.semiring not in ALL_SEMIRINGS:
        raise _ConfigError("unknown semiring %r" % args.semiring)
    try:
        model = load_model(args.model)
    except (OSError, ValueError) as e:
        raise _ConfigError("bad model file: %s" % e)
    print("m=%d M=%d n=%d" % (model.space.m, model.space.M, model.n))
    print("NLN: " + _format_sets("[%d]", nln_partition(model)))
    print("FA: " + _format_sets("(%d)", fa_partition(model)))
    keep = frozenset(_csv_ints(args.keep)) if args.keep else frozenset()
    if not keep <= model.universe:
        raise _ConfigError("keep set outside the model universe")
    split = args.split if args.split is not None else default_split(model.n)
    print("keep={%s} split=%d semiring=%s" % (
        ",".join(str(v) for v in sorted(keep)), split, args.semiring))
    try:
        if args.mode in ("fb", "both"):
            c = count_operators(model, keep, i=split, mode="fb")
            print("fb: ring_sum=%d ring_product=%d total=%d phi=%d" % (
                c["ring_sum"], c["ring_product"], c["total"], c["phi"]))
        if args.mode in ("naive", "both"):
            c = count_operators(model, keep, mode="naive")
            print("naive: ring_sum=%d ring_product=%d total=%d lower=%d upper=%d" % (
                c["ring_sum"], c["ring_product"], c["total"], c["lower"], c["upper"]))
    except ValueError as e:
        raise _ConfigError(str(e))
    return 0


def _cmd_pe_demo(args):
    from .experiments import PE_CSV_HEADER, run_pe_demo, write_csv

    rows = run_pe_demo(_csv_floats(args.rho), transform=args.transform)
    write_csv(args.out, PE_CSV_HEADER, rows, _manifest(args))
    return 0


def _selftest_checks():
    from .channel import rayleigh_quantizer
    from .factors import Factor, FactorModel, VariableSpace
    from .freq import kay_weights
    from .gdl import dual_entropy, fb_reduce_single, naive_reduce
    from .hmc import (HmcModel, bidirectional_viterbi, brute_force_posterior,
                      fb_algorithm, viterbi)
    from .numerics import adaptive_simpson_2d
    from .pe import pe_logpdf, pe_model
    from .semiring import ALL_SEMIRINGS, check_laws, semiring
    from .vb import StoppingConfig, fcvb_run, ivb_run

    rng = np.random.default_rng(20240817)

    def random_hmc(M, n):
        T = rng.random((M, M))
        T /= T.sum(axis=0)
        Psi = rng.random((n, M)) + 0.05
        return HmcModel(T, np.full(M, 1.0 / M), Psi)

    def check_semiring_laws():
        for name in ALL_SEMIRINGS:
            check_laws(semiring(name))

    def check_fb_oracle():
        model = random_hmc(3, 5)
        bf = brute_force_posterior(model)
        sm = fb_algorithm(model)
        for i in range(1, 6):
            assert np.max(np.abs(sm.gamma[i - 1] - bf.marginal(i))) < 1e-10

    def check_viterbi_oracle():
        model = random_hmc(3, 5)
        bf = brute_force_posterior(model)
        vt = viterbi(model)
        assert np.array_equal(vt.labels, bf.map_labels())
        assert np.array_equal(bidirectional_viterbi(model).labels, vt.labels)

    def check_gdl_vs_naive():
        space = VariableSpace(4, 2)
        factors = [
            Factor([1, 2], rng.random((2, 2)) + 0.1, 2),
            Factor([2, 3], rng.random((2, 2)) + 0.1, 2),
            Factor([3, 4], rng.random((2, 2)) + 0.1, 2),
        ]
        model = FactorModel(space, factors)
        for name in ("sum-product", "max-product", "max-sum"):
            sr = semiring(name)
            a = fb_reduce_single(model, sr, {1, 2, 4})
            b = naive_reduce(model, sr, {1, 2, 4})
            assert a.vars == b.vars
            assert np.max(np.abs(a.table - b.table)) < 1e-9

    def check_lemma_equivalence():
        model = random_hmc(3, 12)
        init = np.full((12, 3), 1.0 / 3)
        plain = ivb_run(model, init, StoppingConfig(xi=0.0, max_cycles=50))
        accel = ivb_run(model, init, StoppingConfig(xi=0.0, max_cycles=50, accelerated=True))
        assert plain.nu_c == accel.nu_c and np.array_equal(plain.p, accel.p)
        start = np.argmax(model.Psi, axis=1) + 1
        fp = fcvb_run(model, start, StoppingConfig(max_cycles=50))
        fa = fcvb_run(model, start, StoppingConfig(max_cycles=50, accelerated=True))
        assert fp.nu_c == fa.nu_c and np.array_equal(fp.labels, fa.labels)

    def check_quantizer_threshold():
        q = rayleigh_quantizer(2, 0.5)
        assert abs(q.thresholds[1] - np.sqrt(np.log(2.0))) < 1e-12

    def check_kay_weights():
        assert abs(kay_weights(64).sum() - 1.0) < 1e-12

    def check_dual_entropy():
        space = VariableSpace(2, 2)
        jf = rng.random((2, 2)) + 0.1
        jf /= jf.sum()
        jq = rng.random((2, 2)) + 0.1
        jq /= jq.sum()
        mf = FactorModel(space, [Factor([1, 2], jf, 2)])
        mq = FactorModel(space, [Factor([1, 2], jq, 2)])
        direct = float(np.sum(jf * np.log(jq)))
        assert abs(dual_entropy(mf, mq) - direct) < 1e-12

    def check_pe_normalization():
        model = pe_model(0.5)
        mass = adaptive_simpson_2d(
            lambda a, b: np.exp(pe_logpdf(a, b, model)), -9, 9, -9, 9, rtol=1e-9)
        assert abs(mass - 1.0) < 1e-6

    return [
        ("semiring laws", check_semiring_laws),
        ("smoothing vs exhaustive", check_fb_oracle),
        ("trajectory MAP vs exhaustive", check_viterbi_oracle),
        ("split reduction vs direct", check_gdl_vs_naive),
        ("accelerated sweep equivalence", check_lemma_equivalence),
        ("quantizer threshold", check_quantizer_threshold),
        ("phase-increment weights", check_kay_weights),
        ("dual-number cross entropy", check_dual_entropy),
        ("quartic density normalization", check_pe_normalization),
    ]


def _cmd_selftest(_args):
    failures = 0
    for name, fn in _selftest_checks():
        try:
            fn()
        except Exception as e:  # report every failure, keep going
            failures += 1
            print("FAIL %s: %r" % (name, e))
        else:
            print("ok   %s" % name)
    if failures:
        print("%d check(s) failed" % failures)
        return 2
    print("all checks passed")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        if args.cmd in ("hmc-awgn", "hmc-fading"):
            return _cmd_hmc(args)
        if args.cmd == "freq":
            return _cmd_freq(args)
        if args.cmd == "gdl-count":
            return _cmd_gdl_count(args)
        if args.cmd == "pe-demo":
            return _cmd_pe_demo(args)
        return _cmd_selftest(args)
    except _ConfigError as e:
        if not e.usage_shown:
            parser.print_usage(sys.stderr)
            sys.stderr.write("config error: %s\n" % e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
