"""Command-line front end.

    chase-rd <subcommand> --config <path> [--out <path>] [--format csv|json]
             [--seed <u64>] [--threads <n>] [--plot]

Subcommands: waterfill, awgn-rule, exact, optimize, simulate, figure.
Configs are strict JSON (unknown fields are an error); every output is a
deterministic function of (config, seed).  ``figure`` expands a built-in
preset into one of the other kinds.  With ``--plot`` a rendered PNG is
written next to the data file.

Exit codes: 0 success, 2 validation error, 3 budget guard, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channel import awgn_observe, awgn_transmit, stream
from .errors import BudgetError, NumericalError, ValidationError
from .exact import GridScenario, ListFailureEvaluator, optimize_flip, rdf_vs_optimal_report
from .presets import expand_preset
from .chase import SimulationScenario, run_monte_carlo
from .waterfill import WaterFillInput, awgn_asymptotic_level, awgn_waterfill, solve_waterfill, waterfill

_FIELDS = {
    "waterfill": ({"kind", "composition", "p", "t"}, {"block_length"}),
    "awgn-rule": ({"kind", "sigmas", "block_length", "t"},
                  {"seed", "mode", "rule_samples", "sort"}),
    "exact": ({"kind", "p", "fractions", "t_over_n", "n_grid"}, {"list_rule", "q_tilde"}),
    "optimize": ({"kind", "p", "fractions", "t_over_n", "n_grid"}, {"list_rule"}),
    "simulate": ({"kind", "channel", "decoder", "t", "trials", "seed"},
                 {"N", "p", "composition", "priors", "sigma", "q", "L",
                  "include_zero_pattern", "awgn_rule", "m", "batch_size", "l_budget"}),
}


def _load_config(path: str, kind: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ValidationError("config must be a JSON object")
    if config.get("kind") != kind:
        raise ValidationError(f"config kind {config.get('kind')!r} does not match subcommand {kind!r}")
    return config


def _check_fields(config: dict, kind: str):
    required, optional = _FIELDS[kind]
    unknown = set(config) - required - optional
    if unknown:
        raise ValidationError(f"unknown config fields: {', '.join(sorted(unknown))}")
    missing = required - set(config)
    if missing:
        raise ValidationError(f"missing config fields: {', '.join(sorted(missing))}")


# ---------------------------------------------------------------------------
# runners (config dict -> result dict)

def run_waterfill(config: dict, threads: int = 1) -> dict:
    _check_fields(config, "waterfill")
    inp = WaterFillInput(tuple(config["composition"]), tuple(config["p"]),
                         int(config["t"]), config.get("block_length"))
    sol = solve_waterfill(inp)
    classes = [{
        "class": j + 1,
        "N_j": inp.composition[j],
        "p_j": inp.p[j],
        "D_star_j": float(sol.d_star[j]),
        "q_j": float(sol.q[j]),
    } for j in range(len(inp.p))]
    return {
        "kind": "waterfill",
        "config": dict(config),
        "classes": classes,
        "nu": sol.nu,
        "rate_bits_per_symbol": sol.rate,
        "log2_L": sol.log2_list_size,
        "list_size": sol.list_size,
        "saturated": sol.saturated,
    }


def run_awgn_rule(config: dict, threads: int = 1) -> dict:
    _check_fields(config, "awgn-rule")
    sigmas = [float(s) for s in config["sigmas"]]
    if not sigmas:
        raise ValidationError("sigmas must be non-empty")
    N = int(config["block_length"])
    t = int(config["t"])
    if N < 1 or not 0 <= t <= N:
        raise ValidationError("need block_length >= 1 and 0 <= t <= block_length")
    mode = config.get("mode", "block")
    if mode not in ("block", "asymptotic"):
        raise ValidationError("mode must be 'block' or 'asymptotic'")
    sort = config.get("sort", "reliability")
    if sort not in ("reliability", "index"):
        raise ValidationError("sort must be 'reliability' or 'index'")
    samples = int(config.get("rule_samples", 257))
    seed = int(config.get("seed", 0))
    D = t / N

    levels, allocation, rule_rows = [], [], []
    for si, sigma in enumerate(sigmas):
        if mode == "block":
            rng = stream(seed, si)
            obs = awgn_observe(awgn_transmit(np.zeros(N, dtype=np.uint8), sigma, rng), sigma)
            nu, d_star, q = awgn_waterfill(obs.p_of_llr, t)
            threshold = float(np.log((1.0 - nu) / nu)) if nu > 0 else float("inf")
            no_flip = bool(np.all(q == 0.0))
            order = np.argsort(obs.llr_mag) if sort == "reliability" else np.arange(N)
            for rank, i in enumerate(order):
                allocation.append({
                    "sigma": sigma, "index": rank, "llr": float(obs.llr_mag[i]),
                    "p_of_llr": float(obs.p_of_llr[i]), "d_star": float(d_star[i]),
                    "q": float(q[i]),
                })
            llr_grid = np.linspace(0.0, max(2.0 * threshold, 10.0) if np.isfinite(threshold) else 10.0,
                                   samples)
            from scipy.special import expit
            q_grid = (np.maximum(0.0, (expit(-llr_grid) - nu) / (1.0 - 2.0 * nu))
                      if nu < 0.5 else np.zeros_like(llr_grid))
            rate = None
        else:
            flip_rule = awgn_asymptotic_level(sigma, D, table_points=samples)
            nu, threshold, no_flip = flip_rule.nu, flip_rule.threshold_llr, flip_rule.no_flip
            llr_grid = flip_rule.q_fn_table[:, 0]
            q_grid = flip_rule.q_fn_table[:, 1]
            rate = flip_rule.rate
        levels.append({"sigma": sigma, "nu": float(nu), "threshold_llr": float(threshold),
                       "no_flip": no_flip, "D": D, "rate_bits_per_symbol": rate})
        for llr, qv in zip(llr_grid, q_grid):
            rule_rows.append({"sigma": sigma, "llr": float(llr), "q": float(qv)})

    return {
        "kind": "awgn-rule",
        "config": {**config, "mode": mode, "sort": sort, "rule_samples": samples, "seed": seed},
        "levels": levels,
        "allocation": allocation,
        "rule": rule_rows,
    }


def _grid_scenario(config: dict) -> GridScenario:
    return GridScenario(
        p=tuple(config["p"]),
        fractions=tuple(config["fractions"]),
        t_over_n=float(config["t_over_n"]),
        n_grid=tuple(config["n_grid"]),
        list_rule=config.get("list_rule", "exact"),
    )


def run_exact(config: dict, threads: int = 1) -> dict:
    _check_fields(config, "exact")
    scenario = _grid_scenario(config)
    q_tilde = config.get("q_tilde")
    if q_tilde is not None and len(q_tilde) != len(scenario.p):
        raise ValidationError("q_tilde must have one entry per class")
    _, _, q_ref, rate = waterfill(scenario.fractions, scenario.p, scenario.t_over_n)

    def one_n(N):
        comp = scenario.composition(N)
        t = scenario.radius(N)
        log2_l = N * rate
        L = 2.0 ** log2_l if scenario.list_rule == "exact" else max(1, int(np.ceil(2.0 ** log2_l)))
        evaluator = ListFailureEvaluator(comp, scenario.p, t, L)
        pe_ref = evaluator.value(q_ref)
        pe_alt = evaluator.value(np.asarray(q_tilde)) if q_tilde is not None else None
        return [{
            "N": N, "t": t, "class": j + 1,
            "q_rdf": float(q_ref[j]),
            "q_opt": None if q_tilde is None else float(q_tilde[j]),
            "pe_rdf": pe_ref,
            "pe_opt": pe_alt,
            "L_log2": log2_l,
        } for j in range(len(scenario.p))]

    rows = []
    for chunk in _parallel_map(one_n, scenario.n_grid, threads):
        rows.extend(chunk)
    return {"kind": "exact", "config": {**config, "list_rule": scenario.list_rule}, "rows": rows}


def run_optimize(config: dict, threads: int = 1) -> dict:
    _check_fields(config, "optimize")
    scenario = _grid_scenario(config)
    if threads <= 1 or len(scenario.n_grid) == 1:
        rows = rdf_vs_optimal_report(scenario)
    else:
        _, _, q_ref, rate = waterfill(scenario.fractions, scenario.p, scenario.t_over_n)

        def one_n(N):
            sub = GridScenario(p=scenario.p, fractions=scenario.fractions,
                               t_over_n=scenario.t_over_n, n_grid=(N,),
                               list_rule=scenario.list_rule)
            return rdf_vs_optimal_report(sub)

        rows = []
        for chunk in _parallel_map(one_n, scenario.n_grid, threads):
            rows.extend(chunk)
    return {"kind": "optimize", "config": {**config, "list_rule": scenario.list_rule}, "rows": rows}


def run_simulate(config: dict, threads: int = 1) -> dict:
    _check_fields(config, "simulate")
    scenario = SimulationScenario(
        channel=config["channel"],
        decoder=config["decoder"],
        t=int(config["t"]),
        N=config.get("N"),
        p=tuple(config["p"]) if config.get("p") is not None else None,
        composition=tuple(config["composition"]) if config.get("composition") is not None else None,
        priors=tuple(config["priors"]) if config.get("priors") is not None else None,
        sigma=config.get("sigma"),
        q_override=tuple(config["q"]) if config.get("q") is not None else None,
        L_override=config.get("L"),
        include_zero_pattern=bool(config.get("include_zero_pattern", False)),
        awgn_rule=config.get("awgn_rule", "block"),
        m=config.get("m"),
        batch_size=int(config.get("batch_size", 4096)),
        l_budget=int(config.get("l_budget", 2 ** 20)),
    )
    trials = int(config["trials"])
    if trials < 1:
        raise ValidationError("trials must be positive")
    report = run_monte_carlo(scenario, trials, int(config["seed"]))
    return {
        "kind": "simulate",
        "config": dict(config),
        "report": {
            "trials": report.trials,
            "miss_count": report.miss_count,
            "miss_rate": report.miss_rate,
            "ci_low": report.miss_ci[0],
            "ci_high": report.miss_ci[1],
            "decode_error_rate": report.decode_error_rate,
            "decode_error_ci_low": report.decode_error_ci[0],
            "decode_error_ci_high": report.decode_error_ci[1],
            "miss_decode_error_count": report.decode_error_count,
            "list_size": report.list_size,
            "seed": report.seed,
            "resolved": report.config,
        },
    }


def run_figure(config: dict, threads: int = 1) -> dict:
    if "preset" not in config:
        raise ValidationError("figure config needs a preset")
    overrides = {k: v for k, v in config.items() if k not in ("kind", "preset")}
    expanded = expand_preset(config["preset"], overrides)
    result = _RUNNERS[expanded["kind"]](expanded, threads)
    result["config"]["preset"] = config["preset"]
    return result


_RUNNERS = {
    "waterfill": run_waterfill,
    "awgn-rule": run_awgn_rule,
    "exact": run_exact,
    "optimize": run_optimize,
    "simulate": run_simulate,
    "figure": run_figure,
}


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# serialization

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def render_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    kind = result["kind"]
    if kind == "waterfill":
        writer.writerow(["class", "N_j", "p_j", "D_star_j", "q_j"])
        for row in result["classes"]:
            writer.writerow([_fmt(row[c]) for c in ("class", "N_j", "p_j", "D_star_j", "q_j")])
        writer.writerow(["nu", _fmt(result["nu"])])
        writer.writerow(["rate_bits_per_symbol", _fmt(result["rate_bits_per_symbol"])])
        writer.writerow(["log2_L", _fmt(result["log2_L"])])
    elif kind == "awgn-rule":
        header = ["record", "sigma", "index", "llr", "p_of_llr", "d_star", "q",
                  "nu", "threshold_llr"]
        writer.writerow(header)
        by_sigma = {lvl["sigma"]: lvl for lvl in result["levels"]}
        for lvl in result["levels"]:
            writer.writerow(["level", _fmt(lvl["sigma"]), "", "", "", "", "",
                             _fmt(lvl["nu"]), _fmt(lvl["threshold_llr"])])
        for row in result["allocation"]:
            lvl = by_sigma[row["sigma"]]
            writer.writerow(["allocation", _fmt(row["sigma"]), _fmt(row["index"]),
                             _fmt(row["llr"]), _fmt(row["p_of_llr"]), _fmt(row["d_star"]),
                             _fmt(row["q"]), _fmt(lvl["nu"]), _fmt(lvl["threshold_llr"])])
        for row in result["rule"]:
            lvl = by_sigma[row["sigma"]]
            writer.writerow(["rule", _fmt(row["sigma"]), "", _fmt(row["llr"]), "", "",
                             _fmt(row["q"]), _fmt(lvl["nu"]), _fmt(lvl["threshold_llr"])])
    elif kind in ("exact", "optimize"):
        writer.writerow(["N", "class", "q_rdf", "q_opt", "pe_rdf", "pe_opt", "L_log2"])
        for row in result["rows"]:
            writer.writerow([_fmt(row[c])
                             for c in ("N", "class", "q_rdf", "q_opt", "pe_rdf", "pe_opt", "L_log2")])
    elif kind == "simulate":
        writer.writerow(["trials", "miss_count", "miss_rate", "ci_low", "ci_high",
                         "decode_error_rate", "seed"])
        rep = result["report"]
        writer.writerow([_fmt(rep[c]) for c in ("trials", "miss_count", "miss_rate",
                                                "ci_low", "ci_high", "decode_error_rate", "seed")])
    else:
        raise ValidationError(f"no CSV schema for kind {kind!r}")
    return buf.getvalue()


def render_json(result: dict) -> str:
    return json.dumps(result, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_output(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chase-rd",
                                     description="rate-distortion guided stochastic Chase decoding experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("waterfill", "awgn-rule", "exact", "optimize", "simulate", "figure"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON config path")
        cmd.add_argument("--out", default=None, help="output path (default: stdout)")
        cmd.add_argument("--format", choices=("csv", "json"), default="csv")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--threads", type=int, default=1)
        cmd.add_argument("--plot", action="store_true",
                         help="also render a PNG figure next to --out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config, args.command)
        if args.seed is not None:
            kind = config["kind"]
            target = expand_preset(config["preset"], {}).get("kind") if kind == "figure" else kind
            if target not in ("awgn-rule", "simulate"):
                raise ValidationError(f"--seed does not apply to kind {target!r}")
            config["seed"] = args.seed
        if args.plot and args.out is None:
            raise ValidationError("--plot requires --out")
        result = _RUNNERS[args.command](config, max(1, args.threads))
        text = render_csv(result) if args.format == "csv" else render_json(result)
        _write_output(text, args.out)
        if args.plot:
            from . import plots
            png = plots.render(result, args.out)
            print(f"wrote figure: {png}", file=sys.stderr)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
