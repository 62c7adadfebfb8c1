"""
Command-line entry point
========================

::

    gmee run <config>            run an experiment, write CSV + metadata.json
    gmee validate <config>       check a config, print all errors
    gmee list-algorithms
    gmee complexity --M 10 --L 10 --H 3

Exit codes: 0 ok, 1 usage, 2 config, 3 runtime. Errors are printed to
stderr as a JSON object ``{"error": <category>, "messages": [...]}``.

Output files (fixed header, dB values with 4 decimals)
------------------------------------------------------
sysid
    ``traces.csv``: ``iteration,algorithm,msd_db``
emse
    ``emse.csv``: ``algorithm,eta,emse,emse_db,divergence_count``
sweep
    ``sweep.csv``: ``param_value,noise,algorithm,steady_msd_db,divergence_count``
aec
    per algorithm ``aec_erle_<name>.csv``: ``window_index,erle_db`` and
    ``aec_msd_<name>.csv``: ``iteration,msd_db`` (medians over sessions)
theory
    ``theory.csv``: ``algorithm,eta,alpha,beta,L,M,emse_theory,emse_theory_db,step_bound,joint_step_bound``
complexity
    ``complexity.csv``: ``algorithm,M,L,H,multiplications,additions,exponentiations``
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .aec import AecSession, make_session, run_aec_batch, synth_echo_path, wav_read
from .analysis import (TheoryInputs, complexity_counts, conservative_eps_a, emse_theory, estimate_steady_pq,
                       gmee_step_bound, joint_step_bound)
from .config import ConfigError, ExperimentConfig, parse_config, render_config
from .entropy import GGDKernel
from .filters import ALGORITHMS
from .simkit import AlgorithmSpec, SysIdExperiment, run_sysid, sweep

__all__ = ["main", "execute", "write_atomic"]

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _db(x) -> str:
    return f"{float(x) + 0.0:.4f}".replace("-0.0000", "0.0000")


def _num(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(r) + "\n")
    return buf.getvalue()


def write_atomic(path: Path, text: str):
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _specs(config: ExperimentConfig):
    out = []
    for a in config.algorithms:
        params = {k: v for k, v in a.items() if k not in ("tag", "label")}
        out.append(AlgorithmSpec(a["tag"], params, a.get("label")))
    return out


def _experiment(config, specs):
    return SysIdExperiment(config.noise_model(), tuple(specs), n_taps=config.M,
                           iterations=config.iterations, runs=config.runs, base_seed=config.seed)


def _safe(name):
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _run_sysid(config, meta):
    traces = run_sysid(_experiment(config, _specs(config)))
    rows = []
    for name, tr in traces.items():
        rows += [(str(i), name, _db(v)) for i, v in enumerate(tr.msd_db)]
        meta["diverged_runs"][name] = tr.diverged
    return {"traces.csv": _csv(("iteration", "algorithm", "msd_db"), rows)}


def _run_emse(config, meta):
    exp = replace(_experiment(config, _specs(config)), steady_fraction=config.emse["tail_fraction"])
    traces = run_sysid(exp)
    rows = []
    for spec in exp.algorithms:
        tr = traces[spec.name]
        rows.append((spec.name, _num(spec.params.get("eta", float("nan"))), f"{tr.emse:.6e}",
                     _db(tr.emse_db), str(tr.diverged)))
        meta["diverged_runs"][spec.name] = tr.diverged
    return {"emse.csv": _csv(("algorithm", "eta", "emse", "emse_db", "divergence_count"), rows)}


def _run_sweep(config, meta):
    sw = config.sweep
    specs = _specs(config)
    rows = []
    for spec in specs:
        exp = _experiment(config, [spec])
        cal = sw.get("calibrate")
        cal = None if cal is None else {"base_seed": config.seed + 1_000_000, **cal}
        for r in sweep(exp, sw["param"], sw["values"], calibrate=cal):
            rows.append((_num(r["param_value"]), r["noise"], r["algorithm"], _db(r["steady_msd_db"]),
                         str(r["divergence_count"])))
            if cal is not None:
                meta["calibrated_eta"][f"{r['algorithm']}@{sw['param']}={r['param_value']}"] = r["eta"]
    return {"sweep.csv": _csv(("param_value", "noise", "algorithm", "steady_msd_db", "divergence_count"), rows)}


def _run_aec(config, meta):
    a = config.aec
    files = {}
    far = None
    if "far_end_wav" in a:
        far, _ = wav_read(a["far_end_wav"])
    for spec in _specs(config):
        kw = dict(erle_window=a["erle_window"], erle_hop=a["erle_hop"], erle_cap_db=a["erle_cap_db"],
                  n_taps=config.M)
        sessions = []
        for k in range(a["sessions"]):
            seed = config.seed + k
            if far is None:
                sessions.append(make_session(a["length"], spec, seed=seed, path_length=a["path_length"],
                                             decay_rate=a["decay_rate"], **kw))
            else:
                path = synth_echo_path(a["path_length"], a["decay_rate"], seed=seed + 1_000_003)
                sessions.append(AecSession(far, path, spec, seed=seed, **kw))
        res = run_aec_batch(sessions)
        n_win = min(r.erle_db.size for r in res)
        erle_med = np.median(np.stack([r.erle_db[:n_win] for r in res]), axis=0)
        msd_med = np.median(np.stack([r.msd_db for r in res]), axis=0)
        name = _safe(spec.name)
        files[f"aec_erle_{name}.csv"] = _csv(("window_index", "erle_db"),
                                             [(str(i), _db(v)) for i, v in enumerate(erle_med)])
        files[f"aec_msd_{name}.csv"] = _csv(("iteration", "msd_db"),
                                            [(str(i), _db(v)) for i, v in enumerate(msd_med)])
        meta["diverged_runs"][spec.name] = int(sum(r.diverged for r in res))
    return files


def _run_theory(config, meta):
    th = config.theory
    rows = []
    for spec in _specs(config):
        if spec.tag not in ("gmee", "mee", "qgmee"):
            raise ValueError(f"theory applies to window algorithms, not {spec.tag!r}")
        p = spec.params
        inputs = TheoryInputs(GGDKernel(p["alpha"], p["beta"]), p["L"], config.M, 1.0,
                              config.noise_model(), eta=p["eta"], gamma=p.get("gamma", 0.0))
        rng = np.random.Generator(np.random.PCG64(config.seed))
        pq = estimate_steady_pq(inputs, th["samples"], rng)
        emse = emse_theory(inputs, pq)
        bound = gmee_step_bound(inputs, conservative_eps_a(inputs, pq.difference), pq)
        joint, _, _ = joint_step_bound(inputs, th["misalignment"], rng=rng)
        with np.errstate(divide="ignore"):
            emse_db = 10 * np.log10(emse)
        rows.append((spec.name, _num(p["eta"]), _num(p["alpha"]), _num(p["beta"]), str(p["L"]), str(config.M),
                     f"{emse:.6e}", _db(emse_db), f"{bound:.6e}", f"{joint:.6e}"))
    header = ("algorithm", "eta", "alpha", "beta", "L", "M", "emse_theory", "emse_theory_db",
              "step_bound", "joint_step_bound")
    return {"theory.csv": _csv(header, rows)}


def _complexity_rows(M, L, H):
    rows = []
    for tag in ("lms", "lmf", "gmcc", "gmee", "qgmee"):
        mul, add, exp = complexity_counts(tag, M, L, H)
        rows.append((tag, str(M), str(L), str(H), str(mul), str(add), str(exp)))
    return rows


_COMPLEXITY_HEADER = ("algorithm", "M", "L", "H", "multiplications", "additions", "exponentiations")


def _run_complexity(config, meta):
    return {"complexity.csv": _csv(_COMPLEXITY_HEADER, _complexity_rows(config.M, config.L, config.complexity["H"]))}


_RUNNERS = {"sysid": _run_sysid, "emse": _run_emse, "sweep": _run_sweep, "aec": _run_aec,
            "theory": _run_theory, "complexity": _run_complexity}


def execute(config: ExperimentConfig, output_dir=None) -> dict:
    """Run ``config`` and write its CSVs plus ``metadata.json``.

    All results are computed before anything is written, and each file is
    written atomically, so a failing run leaves no incomplete CSV.

    Returns the metadata dictionary.
    """
    out = Path(output_dir if output_dir is not None else config.output_dir)
    text = render_config(config)
    meta = {
        "kind": config.kind,
        "config_fingerprint": hashlib.sha256(text.encode()).hexdigest(),
        "base_seed": config.seed,
        "run_seeds": [config.seed, config.seed + config.runs - 1],
        "calibrated_eta": {},
        "diverged_runs": {},
        "version": __version__,
    }
    files = _RUNNERS[config.kind](config, meta)
    meta["files"] = sorted(files)
    out.mkdir(parents=True, exist_ok=True)
    for name, body in files.items():
        write_atomic(out / name, body)
    write_atomic(out / "metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def _report(category, messages):
    print(json.dumps({"error": category, "messages": list(messages)}), file=sys.stderr)


def _load(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _build_parser():
    p = _Parser(prog="gmee", description="GMEE adaptive filtering experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None)
    v = sub.add_parser("validate", help="validate an experiment config")
    v.add_argument("config")
    sub.add_parser("list-algorithms", help="list algorithm tags")
    c = sub.add_parser("complexity", help="per-iteration operation counts")
    c.add_argument("--M", type=int, required=True)
    c.add_argument("--L", type=int, required=True)
    c.add_argument("--H", type=int, required=True)
    return p


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        _report("usage", [str(exc)])
        return EXIT_USAGE
    try:
        if args.command == "list-algorithms":
            for tag in sorted(ALGORITHMS):
                print(tag)
            return EXIT_OK
        if args.command == "complexity":
            try:
                rows = _complexity_rows(args.M, args.L, args.H)
            except ValueError as exc:
                _report("usage", [str(exc)])
                return EXIT_USAGE
            sys.stdout.write(_csv(_COMPLEXITY_HEADER, rows))
            return EXIT_OK
        config = _load(args.config)
        if args.command == "validate":
            print("ok")
            return EXIT_OK
        meta = execute(config, args.output_dir)
        print(json.dumps({"status": "ok", "files": meta["files"]}))
        return EXIT_OK
    except UsageError as exc:
        _report("usage", [str(exc)])
        return EXIT_USAGE
    except ConfigError as exc:
        _report("config", exc.errors)
        return EXIT_CONFIG
    except Exception as exc:  # downstream failures surface as runtime errors
        _report("runtime", [f"{type(exc).__name__}: {exc}"])
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
