"""Command-line front end.

Every verb writes its CSVs and a ``manifest.json`` into the output directory
(``--out``, else ``$CTL_OUT``, else ``./ctl_out``).  Exit status is 0 when all
checks pass, 1 when a check fails (``failures.json`` lists them) and 2 on a
usage or parameter error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .branching import OffspringLaw, max_tail_estimate
from .exploration import component_sizes, explore_fast, steps_for_horizon
from .graph import C_CRIT, GraphParams, degree_residual, expected_degree_sum, second_moment_sum
from .markov import (
    DENSE_CAP,
    KernelSpec,
    mixing_profile,
    return_probability,
    two_step_dominance_check,
    two_step_weight,
)
from .rng import run_seeds, stream
from .stats import run_campaign, sample_limit_threaded, walker_uniformity

VERBS = ("verify", "mixing", "explore", "campaign", "limit", "branching", "uniformity")

# calibrated on exact sums over N in {50, ..., 800}; see README
DEGREE_RESIDUAL_FACTOR = 0.7  # |residual| * N^4 <= factor * c; the limit is c / 2
RESIDUAL_RATIO = (12.0, 20.0)  # residual(N) / residual(2N - 1), about 2^4
RETURN_BAND = (0.09, 0.17)  # N^2 P^2(u, u) - 4 c^2 log N
KS_THRESHOLD = 0.08
TAIL_BAND = (0.75, 1.25)

# flag name -> (type, default)
FLAGS: dict[str, tuple[type, Any]] = {
    "N": (int, None),
    "c": (float, None),
    "critical": (bool, False),
    "alpha": (float, 1.0),
    "T": (float, 10.0),
    "runs": (int, None),
    "seed": (int, 0),
    "threads": (int, 1),
    "out": (str, None),
    "dt": (float, 1e-4),
    "limit-runs": (int, 5000),
    "top": (int, 3),
    "kmax": (int, None),
    "i": (int, 5),
    "j": (int, None),
}

VERB_DEFAULTS = {
    "verify": {"N": 101},
    "mixing": {"N": 25, "kmax": 40},
    "explore": {"N": 150},
    "campaign": {"N": 150, "runs": 2000},
    "limit": {},
    "branching": {"N": 10_000, "runs": 2_000_000, "kmax": 50},
    "uniformity": {"N": 15, "runs": 1_000_000},
}


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


def _parse_value(key: str, raw: str):
    typ = FLAGS[key][0]
    if typ is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ is int:
        v = float(raw)
        if not v.is_integer():
            raise ValueError(f"not an integer: {raw!r}")
        return int(v)
    return typ(raw)


def load_config(path) -> dict:
    """Read ``key = value`` lines (``#`` starts a comment); keys are flag names.

    A ``manifest.json`` written by a previous run is accepted as well, in
    which case its recorded parameters are used.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        params = data.get("params", data)
        return {k: v for k, v in params.items() if k in FLAGS and k not in ("out", "threads")}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (x.strip() for x in line.split("=", 1))
        if key not in FLAGS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _parse_value(key, raw)
        except ValueError as e:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {e}") from None
    return out


def resolve(verb: str, flags: dict, config: Optional[dict] = None) -> dict:
    """Flags beat the config file, which beats the verb's defaults."""
    params = {k: d for k, (_, d) in FLAGS.items()}
    params.update(VERB_DEFAULTS.get(verb, {}))
    params.update(config or {})
    params.update({k: v for k, v in flags.items() if v is not None and not (k == "critical" and v is False)})
    if params["critical"] or params["c"] is None:
        params["c"] = C_CRIT
        params["critical"] = True
    if params["out"] is None:
        params["out"] = os.environ.get("CTL_OUT", "ctl_out")
    if params["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    if verb != "limit":
        GraphParams(params["N"], params["c"], params["alpha"])  # propagates domain errors
    return params


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for name, (typ, _) in FLAGS.items():
        opt = f"--{name}"
        dest = name.replace("-", "_")
        if typ is bool:
            common.add_argument(opt, dest=dest, action="store_true", default=None)
        else:
            common.add_argument(opt, dest=dest, type=typ, default=None)
    common.add_argument("--config", default=None, metavar="FILE")
    parser = argparse.ArgumentParser(prog="ctlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "verify": "exact degree, second-moment and return-probability identities",
        "mixing": "total-variation profile of the edge-weighted walk",
        "explore": "dump one breadth-first walk",
        "campaign": "walk moments and component/excursion comparison",
        "limit": "sample excursion lengths of the drifted Brownian motion",
        "branching": "max-generation tail of the dominating branching process",
        "uniformity": "law of the vertex processed at a late step",
    }
    for v in VERBS:
        sub.add_parser(v, parents=[common], help=helps[v])
    return parser


def _atomic_json(path: Path, data: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    os.replace(tmp, path)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x)}")


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------- verbs
# each returns (suites: name -> bool, details: dict, files: list, notes: dict)


def _verify(p: dict, out: Path):
    N, c = p["N"], p["c"]
    if p["alpha"] != 1.0:
        raise UsageError("verify needs alpha = 1")
    params = GraphParams(N, c)
    S = expected_degree_sum(params)
    res = degree_residual(params)
    N2 = 2 * N - 1 if N % 2 else 2 * N
    res2 = degree_residual(GraphParams(N2, c))
    ratio = res / res2 if res2 != 0 else math.nan
    m2 = second_moment_sum(params)
    spec = KernelSpec(N, c)
    ret = return_probability(spec)
    offset = N * N * ret - 4 * c * c * math.log(N)
    suites = {
        "degree_residual": abs(res) * N**4 <= DEGREE_RESIDUAL_FACTOR * c,
        "degree_residual_ratio": c == 0 or RESIDUAL_RATIO[0] <= ratio <= RESIDUAL_RATIO[1],
        # the band is calibrated for N >= 50 at the critical coupling
        "return_probability_band": RETURN_BAND[0] <= offset <= RETURN_BAND[1] if p["critical"] and N >= 50 else True,
        "return_probability_identity": math.isclose(ret, m2 / S**2, rel_tol=1e-12),
    }
    rows = [["expected_degree", repr(S)], ["degree_residual", repr(res)], ["residual_N4", repr(res * N**4)],
            [f"residual_ratio_{N}_{N2}", repr(ratio)], ["second_moment", repr(m2)],
            ["return_probability", repr(ret)], ["return_offset", repr(offset)]]
    if N >= 50:
        rng = stream(p["seed"], "verify-pairs")
        pairs = rng.integers(0, N * N, size=(20, 2))
        worst = max(two_step_weight(N, c, int(u), int(v)) for u, v in pairs)
        bound = 5 * c * c * math.log(N) / N**2
        suites["two_step_weight_bound"] = worst <= bound
        rows.append(["two_step_weight_max", repr(worst)])
    if N <= DENSE_CAP:
        pairs = None
        if N > 9:
            rng = stream(p["seed"], "verify-dominance")
            pairs = [tuple(map(int, x)) for x in rng.integers(0, N * N, size=(100, 2))]
        dom = two_step_dominance_check(spec, pairs)
        suites["two_step_dominance"] = dom.passed
        rows.append(["dominance_worst_ratio", repr(dom.worst_ratio)])
    _write_rows(out / "verify.csv", ["quantity", "value"], rows)
    print(f"degree residual at N={N}: {res:.6e} (x N^4 = {res * N**4:.6f}); ratio vs N={N2}: {ratio:.4f}")
    notes = {"degree_residual_bound": "|residual| N^4 <= 0.7 c; exact sums approach c/2 from below",
             "return_band": "pilot-frozen on N in {50, 100, 200, 400}"}
    return suites, dict(rows), ["verify.csv"], notes


def _mixing(p: dict, out: Path):
    spec = KernelSpec(p["N"], p["c"])
    rep = mixing_profile(spec, p["kmax"], seed=p["seed"])
    rep.write_csv(out / "mixing.csv")
    return {"mixing_bound": rep.passed}, {"max_tv_at_kmax": float(rep.max_tv[-1])}, ["mixing.csv"], {}


def _explore(p: dict, out: Path):
    params = GraphParams(p["N"], p["c"], p["alpha"])
    K = min(params.n, steps_for_horizon(p["T"], params.n))
    seed = int(run_seeds(p["seed"], "explore", 0, 1)[0])
    tr = explore_fast(params, K, seed)
    tr.write_csv(out / "trace.csv")
    tr.write_components_csv(out / "components.csv")
    identity = bool(np.array_equal(tr.z, np.concatenate([[0], np.cumsum(tr.revealed - 1)])))
    comp = component_sizes(tr)
    details = {"steps": tr.steps, "completed": int(comp.sizes.size),
               "largest": int(comp.sizes[0]) if comp.sizes.size else 0, "partial": comp.partial}
    return {"walk_identity": identity}, details, ["trace.csv", "components.csv"], {}


def _campaign(p: dict, out: Path):
    res = run_campaign(p["N"], p["c"], p["T"], p["runs"], p["seed"], M_limit=p["limit-runs"], j=p["top"],
                       dt=p["dt"], threads=p["threads"], ks_threshold=KS_THRESHOLD)
    files = res.write(out)
    notes = {"moments": "mean within max(0.1 s^2, 4 sqrt(s/M)) of -s^2/2; variance within 15% of s",
             "ks_coordinate_1": f"pilot-frozen threshold {KS_THRESHOLD}"}
    return res.suites, {"ks": res.components.ks.tolist(), "mean": res.moments.mean.tolist(),
                        "variance": res.moments.variance.tolist()}, files, notes


def _limit(p: dict, out: Path):
    M = p["limit-runs"]
    lc = sample_limit_threaded(p["T"], p["dt"], M, p["top"], p["seed"], p["threads"])
    lc.write_csv(out / "limit.csv")
    ordered = bool(np.all(np.diff(lc.completed, axis=1) <= 0))
    return {"ordered": ordered}, {"mean_gamma1": float(lc.completed[:, 0].mean())}, ["limit.csv"], {}


def _branching(p: dict, out: Path):
    law = OffspringLaw(p["N"], p["c"], p["alpha"])
    Ks = [K for K in (5, 10, 20, 50) if K < p["kmax"]] + [p["kmax"]]
    ests = []
    for K in Ks:
        M = p["runs"] if K == Ks[-1] else max(1, p["runs"] // 5)
        ests.append(max_tail_estimate(law, K, M, seed=p["seed"]))
    rows = [[e.K, e.samples, e.hits, repr(e.value), repr(e.ci_low), repr(e.ci_high)] for e in ests]
    _write_rows(out / "branching.csv", ["K", "samples", "hits", "value", "ci_low", "ci_high"], rows)
    last = ests[-1]
    trend = all(b.ci_high >= a.ci_low for a, b in zip(ests, ests[1:]))
    suites = {"tail_band": TAIL_BAND[0] <= last.value <= TAIL_BAND[1], "trend": trend}
    return suites, {"values": [e.value for e in ests], "offspring_mean": law.mean}, ["branching.csv"], \
        {"tail_band": "pilot-frozen [0.75, 1.25] at K=50, N=10^4"}


def _uniformity(p: dict, out: Path):
    n = p["N"] ** 2
    i = p["i"]
    j = p["j"] if p["j"] is not None else i + math.ceil(n ** (1 / 6) - 1e-12)
    res = walker_uniformity(p["N"], p["c"], i, j, p["runs"], p["seed"], threads=p["threads"])
    _write_rows(out / "uniformity.csv", ["vertex", "x", "y", "count"],
                [[v, v // p["N"], v % p["N"], int(k)] for v, k in enumerate(res.counts)])
    details = {"i": i, "j": j, "tv": res.tv, "noise_floor": res.noise_floor, "ratio": res.ratio,
               "bootstrap_ci": list(res.ci), "displacement_tv": res.displacement_tv,
               "displacement_floor": res.displacement_floor}
    return {"tv_vs_floor": res.passed}, details, ["uniformity.csv"], \
        {"tv_vs_floor": "TV <= 1.5 x TV of a uniform sample of the same size"}


HANDLERS = {"verify": _verify, "mixing": _mixing, "explore": _explore, "campaign": _campaign,
            "limit": _limit, "branching": _branching, "uniformity": _uniformity}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verb = args.verb
    flags = {k: getattr(args, k.replace("-", "_")) for k in FLAGS}
    try:
        config = load_config(args.config) if args.config else {}
        p = resolve(verb, flags, config)
    except (ConfigError, UsageError, ValueError, OSError) as e:
        print(f"ctlab {verb}: {e}", file=sys.stderr)
        return 2
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        suites, details, files, notes = HANDLERS[verb](p, out)
    except (UsageError, ValueError) as e:
        print(f"ctlab {verb}: {e}", file=sys.stderr)
        return 2
    suites = {k: bool(v) for k, v in suites.items()}
    manifest = {
        "tool": "ctlab",
        "version": __version__,
        "command": verb,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "params": {k: p[k] for k in FLAGS},
        "seed": p["seed"],
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "elapsed_s": time.perf_counter() - t0,
        "suites": suites,
        "details": details,
        "files": files,
        "provenance": notes,
    }
    _atomic_json(out / "manifest.json", manifest)
    failed = [k for k, ok in suites.items() if not ok]
    for k, ok in suites.items():
        print(f"{'PASS' if ok else 'FAIL'} {k}")
    if failed:
        report = {"command": verb, "failed": failed, "details": details}
        _atomic_json(out / "failures.json", report)
        print(json.dumps(report, default=_jsonable), file=sys.stderr)
        return 1
    stale = out / "failures.json"
    if stale.exists():
        stale.unlink()
    return 0


if __name__ == "__main__":
    sys.exit(main())
