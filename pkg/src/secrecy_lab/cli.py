"""``secrecy-lab`` command line interface.

Every subcommand prints JSON (or writes it to ``--out``). When ``--out`` is
given a run manifest is written next to it as ``<out>.manifest.json``;
``secrecy-lab replay <manifest>`` re-runs the command into a scratch
directory and checks that every output file is byte-identical.

Exit codes: 0 success, 1 replay mismatch, 2 validation error, 3 size guard,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import contextlib
import hashlib
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from ._util import SizeGuardError, ValidationError, derive_seed
from .ballbins import OccupancyParams, occupancy_stats, simulate_distinct
from .channel import induced_distributions, load_aux, load_channel
from .codebook import (
    EncodingError,
    MartonConfig,
    count_distinct,
    dump_codebook_csv,
    generate_codebook,
    preselect_pairs,
)
from .region import eliminate, load_system, pre_fm_system, search_distributions
from .secrecy import average_leakage, estimate_error_prob

# options naming files the command writes; replay redirects these
OUTPUT_OPTIONS = ("--out", "--dump-codebook", "--plot-data", "--emit-pre-fm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def export_plot_data(polygons, path: str | Path) -> None:
    """CSV with columns ``sample_id, vertex_index, r1, r2``.

    ``polygons`` is a list of :class:`RatePolygon` (ids are list positions)
    or of ``(sample_id, RatePolygon)`` pairs.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "vertex_index", "r1", "r2"])
        for k, item in enumerate(polygons):
            sid, poly = item if isinstance(item, tuple) else (k, item)
            for j, (r1, r2) in enumerate(poly.vertices):
                w.writerow([sid, j, f"{r1:.9g}", f"{r2:.9g}"])


def _write_region_lines(samples, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "vertices"])
        for s in samples:
            w.writerow([s.index, ";".join(f"{a:.9g} {b:.9g}" for a, b in s.polygon.vertices)])


def _marton_config(a, seed: int) -> MartonConfig:
    return MartonConfig(a.n, a.r1, a.r2, a.rl1, a.rl2, a.eps_pair, seed)


def cmd_ballbins(a, outputs):
    p = OccupancyParams(a.t, a.s)
    st = occupancy_stats(p)
    res = {"t": a.t, "s": a.s, "mean": st.mean, "variance": st.variance, "mean_fraction": st.mean_fraction}
    if a.trials:
        sim = simulate_distinct(p, a.trials, a.seed)
        res["simulated"] = {"trials": sim.trials, "mean": sim.mean, "variance": sim.variance, "std_error": sim.std_error, "seed": a.seed}
    return res


def cmd_codebook_sim(a, outputs):
    aux = load_aux(a.aux)
    base = _marton_config(a, 0)
    draws = []
    for d in range(a.draws):
        cfg = base.with_seed(derive_seed(a.seed, 10, d))
        cb = generate_codebook(cfg, aux)
        rep = count_distinct(preselect_pairs(cb, cfg.seed), cb)
        if d == 0 and a.dump_codebook:
            dump_codebook_csv(cb, a.dump_codebook)
            outputs.append(a.dump_codebook)
        draws.append(rep.to_dict())
    occ1 = occupancy_stats(base.l1, base.m2)
    occ2 = occupancy_stats(base.l2, base.m1)
    return {
        "config": {"n": a.n, "M1": base.m1, "M2": base.m2, "L1": base.l1, "L2": base.l2, "eps_pair": a.eps_pair, "seed": a.seed},
        "draws": draws,
        "mean_fraction_1": float(np.mean([d["mean_fraction_1"] for d in draws])),
        "mean_fraction_2": float(np.mean([d["mean_fraction_2"] for d in draws])),
        "prediction": {
            "user1": {"t": base.l1, "s": base.m2, "mean": occ1.mean, "variance": occ1.variance, "fraction": occ1.mean_fraction},
            "user2": {"t": base.l2, "s": base.m1, "mean": occ2.mean, "variance": occ2.variance, "fraction": occ2.mean_fraction},
        },
    }


def cmd_leakage(a, outputs):
    ch, aux = load_channel(a.channel), load_aux(a.aux)
    rep = average_leakage(_marton_config(a, 0), aux, ch, a.draws, a.seed)
    return rep.to_dict()


def cmd_errors(a, outputs):
    ch, aux = load_channel(a.channel), load_aux(a.aux)
    cfg = _marton_config(a, derive_seed(a.seed, 11))
    cb = generate_codebook(cfg, aux)
    sel = preselect_pairs(cb, cfg.seed)
    rep = estimate_error_prob(cb, sel, ch, a.trials, a.seed, a.eps_dec, a.decoder)
    out = rep.to_dict()
    out["preselection_failures"] = sel.failure_count
    return out


def cmd_region(a, outputs):
    ch = load_channel(a.channel)
    res = search_distributions(ch, a.u1, a.u2, a.samples, a.seed, mode=a.mode, grid_step=a.grid_step)
    if a.plot_data:
        export_plot_data([(s.index, s.polygon) for s in res.samples], a.plot_data)
        outputs.append(a.plot_data)
    if a.out:
        _write_region_lines(res.samples, Path(a.out))
        outputs.append(a.out)
        return None
    return {
        "samples": [
            {"sample_id": s.index, "profile": list(s.profile.as_tuple()), "vertices": [list(v) for v in s.polygon.vertices]}
            for s in res.samples
        ],
        "union_vertices": [list(v) for v in res.union_vertices],
    }


def cmd_fm(a, outputs):
    sys_ = load_system(a.system)
    names = [v.strip() for v in a.eliminate.split(",") if v.strip()]
    return eliminate(sys_, names).to_dict()


def cmd_profile(a, outputs):
    ch, aux = load_channel(a.channel), load_aux(a.aux)
    mi = induced_distributions(aux, ch)
    if a.emit_pre_fm:
        Path(a.emit_pre_fm).write_text(_dumps(pre_fm_system(mi).to_dict()), encoding="utf-8")
        outputs.append(a.emit_pre_fm)
    return {
        "i_u1_y1": mi.i_u1_y1, "i_u2_y2": mi.i_u2_y2, "i_u1_z": mi.i_u1_z,
        "i_u2_z": mi.i_u2_z, "i_u1_u2": mi.i_u1_u2, "h_u1": mi.h_u1, "h_u2": mi.h_u2,
    }


def _add_rates(p):
    p.add_argument("--n", type=int, required=True, help="block length")
    for r in ("r1", "r2", "rl1", "rl2"):
        p.add_argument(f"--{r}", type=float, required=True, help=f"rate {r} in bits per channel use")
    p.add_argument("--eps-pair", type=float, default=1e9, help="typicality slack for pair preselection (default: vacuous)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="secrecy-lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ballbins", help="occupancy mean/variance, optionally simulated")
    p.add_argument("--t", type=int, required=True, help="number of bins")
    p.add_argument("--s", type=int, required=True, help="number of balls")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ballbins)

    p = sub.add_parser("codebook-sim", help="distinct-sequence counts of preselected pairs")
    p.add_argument("--aux", required=True)
    _add_rates(p)
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-codebook", help="write the first draw's codebook as CSV")
    p.set_defaults(func=cmd_codebook_sim)

    p = sub.add_parser("leakage", help="exact eavesdropper leakage averaged over codebooks")
    p.add_argument("--channel", required=True)
    p.add_argument("--aux", required=True)
    _add_rates(p)
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("errors", help="Monte Carlo decoding error probability")
    p.add_argument("--channel", required=True)
    p.add_argument("--aux", required=True)
    _add_rates(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--eps-dec", type=float, default=1.0)
    p.add_argument("--decoder", choices=("typicality", "ml"), default="typicality")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("region", help="rate regions over sampled auxiliary distributions")
    p.add_argument("--channel", required=True)
    p.add_argument("--u1", type=int, default=2)
    p.add_argument("--u2", type=int, default=2)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("random", "grid"), default="random")
    p.add_argument("--grid-step", type=float, default=0.25)
    p.add_argument("--plot-data", help="also write sample_id,vertex_index,r1,r2 CSV")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("fm", help="Fourier-Motzkin elimination on a JSON constraint system")
    p.add_argument("--system", required=True)
    p.add_argument("--eliminate", required=True, help="comma-separated variable names")
    p.set_defaults(func=cmd_fm)

    p = sub.add_parser("profile", help="the five mutual informations for a channel and aux pair")
    p.add_argument("--channel", required=True)
    p.add_argument("--aux", required=True)
    p.add_argument("--emit-pre-fm", help="write the pre-elimination constraint system as JSON")
    p.set_defaults(func=cmd_profile)

    for name, sp in sub.choices.items():
        sp.add_argument("--out", help="write the result here instead of stdout (plus a manifest)")

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("manifest")
    p.set_defaults(func=None)
    return ap


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _run(argv: Sequence[str]) -> int:
    ap = build_parser()
    if not argv:
        ap.print_usage(sys.stderr)
        return 2
    a = ap.parse_args(argv)
    if a.command is None:
        ap.print_usage(sys.stderr)
        return 2
    if a.command == "replay":
        return replay(a.manifest)
    started = datetime.now(timezone.utc).isoformat()
    outputs: list[str] = []
    result = a.func(a, outputs)
    if result is not None:
        text = _dumps(result)
        if a.out:
            Path(a.out).write_text(text, encoding="utf-8")
            outputs.insert(0, a.out)
        else:
            sys.stdout.write(text)
    if a.out:
        manifest = {
            "command": a.command,
            "argv": list(argv),
            "cwd": os.getcwd(),
            "params": {k: v for k, v in vars(a).items() if k not in ("func", "command")},
            "seed": getattr(a, "seed", None),
            "version": __version__,
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": {str(p): _sha256(p) for p in outputs},
        }
        Path(f"{a.out}.manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return 0


def _redirect(argv: list[str], scratch: Path) -> tuple[list[str], dict[str, str]]:
    out, mapping = list(argv), {}
    for k, tok in enumerate(out[:-1]):
        if tok in OUTPUT_OPTIONS:
            new = str(scratch / f"{k}_{Path(out[k + 1]).name}")
            mapping[out[k + 1]] = new
            out[k + 1] = new
    return out, mapping


@contextlib.contextmanager
def _chdir(path):
    prev = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(prev)


def replay(manifest_path: str | Path) -> int:
    """Re-run a manifest's command; 0 if all output digests match, else 1."""
    try:
        m = json.loads(Path(manifest_path).read_text())
        argv, digests = m["argv"], m["outputs"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise ValidationError(f"bad manifest {manifest_path}: {exc}") from exc
    # relative input paths are resolved where the original run happened
    cwd = m.get("cwd") or os.getcwd()
    with tempfile.TemporaryDirectory() as tmp, _chdir(cwd):
        new_argv, mapping = _redirect(argv, Path(tmp))
        code = _run(new_argv)
        if code:
            return code
        ok = True
        for path, digest in digests.items():
            got = _sha256(mapping.get(path, path))
            same = got == digest
            ok &= same
            print(f"{'OK' if same else 'MISMATCH'} {path}")
    return 0 if ok else 1


def main(argv: Iterable[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _run(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, EncodingError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
