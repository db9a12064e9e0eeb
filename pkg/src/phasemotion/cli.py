"""Command-line interface.

Every command that writes files stages them in a hidden directory inside the
output location and moves them into place only after all of them were
written, next to a ``run.json`` sidecar recording the exact configuration.
``phasemotion replay run.json`` re-runs a recorded configuration.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .bench import format_table, run_bench
from .errors import PhaseMotionError, ValidationError
from .flow import flow_magnitude_stats, horn_schunck, write_flo
from .image import FrameSequence, read_frames, resize_sequence, write_frames, write_image
from .metrics import ccc, pearson
from .perturb import GammaJitterSpec, gamma_corrupt_sequence, report_csv, robustness_sweep, summarize
from .phase_motion import DEFAULT_LENGTH, DEFAULT_SIGMA, pack_snippet, snippet_phase_diffs, write_snippet
from .pyramid import PyramidSpec, build_filter_bank, decompose, phase, write_filter_bank
from .synthetic import expression_sequence

PHASE_SIZE = 48


class StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except (PhaseMotionError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


class Staging:
    """Collects output files and publishes them all at once."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.created = not self.out_dir.exists()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.dir = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out_dir))

    def __truediv__(self, name):
        return self.dir / name

    def commit(self):
        for path in sorted(self.dir.rglob("*")):
            if path.is_file():
                target = self.out_dir / path.relative_to(self.dir)
                target.parent.mkdir(parents=True, exist_ok=True)
                os.replace(path, target)
        shutil.rmtree(self.dir)

    def abort(self):
        shutil.rmtree(self.dir, ignore_errors=True)
        if self.created and not any(self.out_dir.iterdir()):
            self.out_dir.rmdir()


@contextlib.contextmanager
def staged(out_dir):
    staging = Staging(out_dir)
    try:
        yield staging
    except BaseException:
        staging.abort()
        raise
    staging.commit()


def run_config(args) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {"command": args.command, "config": config, "version": __version__,
            "backend": _backend.active_name()}


def write_sidecar(args, path):
    Path(path).write_text(json.dumps(run_config(args), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _spec(args):
    return PyramidSpec(args.scales, args.orients)


def _load(args, default_size=None):
    with stage("read"):
        seq = read_frames(args.in_frames)
    size = getattr(args, "size", default_size)
    if size and not getattr(args, "no_resize", False):
        with stage("resize"):
            seq = resize_sequence(seq, size, size)
    return seq


def cmd_decompose(args):
    seq = _load(args)
    h, w = seq.shape
    with stage("filter bank"):
        bank = build_filter_bank(w, h, _spec(args))
    with staged(args.out) as out:
        write_filter_bank(bank, out / "bank.cspb")
        for i, frame in enumerate(seq.frames):
            with stage(f"decompose frame {i}"):
                coeffs = decompose(frame, bank)
                phases = phase(coeffs)
            for s, band in enumerate(coeffs.bands):
                for k in range(band.shape[0]):
                    stem = f"frame{i:05d}_s{s}_o{k}"
                    amp = np.abs(band[k])
                    peak = amp.max()
                    write_image(amp / peak if peak > 0 else amp, out / f"{stem}_amp.png")
                    write_image(phases[s][0][k], out / f"{stem}_phase.png", signed=True)
                    # raw coefficients: interleaved (re, im) little-endian float32
                    pairs = np.stack([band[k].real, band[k].imag], axis=-1).astype("<f4")
                    (out / f"{stem}.coef").write_bytes(pairs.tobytes())
        write_sidecar(args, out / "run.json")
    print(f"decomposed {len(seq)} frames of {w}x{h} into {args.out}")


def cmd_phasediff(args):
    seq = _load(args, PHASE_SIZE)
    if not 2 <= args.length:
        raise StageError("config", "--length must be at least 2")
    if len(seq) < args.length:
        raise StageError("config", f"need at least {args.length} frames, found {len(seq)}")
    h, w = seq.shape
    with stage("filter bank"):
        bank = build_filter_bank(w, h, _spec(args))
    stride = args.stride or args.length
    starts = range(0, len(seq) - args.length + 1, stride)
    with staged(args.out) as out:
        write_filter_bank(bank, out / "bank.cspb")
        for n, start in enumerate(starts):
            window = FrameSequence(seq.frames[start : start + args.length])
            with stage(f"snippet {n}"):
                pairs = snippet_phase_diffs(window, bank, args.sigma)
                tensors = pack_snippet(pairs)
            write_snippet(tensors, out / f"snippet{n:04d}.snip")
            if not args.no_png:
                for t, fields in enumerate(pairs):
                    for (s, k), f in sorted(fields.items()):
                        write_image(f.values, out / f"snippet{n:04d}_pair{t:02d}_s{s}_o{k}.png", signed=True)
        write_sidecar(args, out / "run.json")
    shapes = ", ".join(str(t.shape) for t in tensors)
    print(f"wrote {len(starts)} snippet(s) to {args.out}; tensor shapes {shapes}")


def cmd_flow(args):
    seq = _load(args)
    seq.require_motion()
    stats = []
    with staged(args.out) as out:
        for i, (a, b) in enumerate(zip(seq.frames, seq.frames[1:])):
            with stage(f"flow pair {i}"):
                flow = horn_schunck(a, b, args.alpha, args.iters)
            write_flo(flow, out / f"pair{i:05d}.flo")
            stats.append(flow_magnitude_stats(flow))
        write_sidecar(args, out / "run.json")
    med = np.median([s["median"] for s in stats])
    print(f"wrote {len(stats)} flow field(s) to {args.out}; median |flow| {med:.4f} px")


def cmd_corrupt(args):
    seq = _load(args)
    with stage("corrupt"):
        jitter = GammaJitterSpec(args.beta, args.seed)
        corrupted = gamma_corrupt_sequence(seq, jitter)
    with staged(args.out) as out:
        write_frames(corrupted, out.dir)
        with open(out / "gammas.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["frame", "gamma"])
            for t in range(len(seq)):
                writer.writerow([t, repr(jitter.gamma(t))])
        write_sidecar(args, out / "run.json")
    print(f"wrote {len(seq)} corrupted frame(s) to {args.out} (beta={args.beta}, seed={args.seed})")


def _read_column_file(path):
    rows = _read_csv_rows(path)
    return [r[0] for r in rows]


def _read_csv_rows(path):
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            row = [c.strip() for c in row if c.strip()]
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if i == 0 and not rows:
                    continue  # header
                raise ValidationError(f"{path}: line {i + 1}: non-numeric value") from None
    return rows


def load_series(pred, truth=None):
    """Two series from a two-column CSV, or from two one-column files."""
    if truth is None:
        rows = _read_csv_rows(pred)
        if any(len(r) < 2 for r in rows):
            raise ValidationError(f"{pred}: expected two columns")
        return [r[0] for r in rows], [r[1] for r in rows]
    return _read_column_file(pred), _read_column_file(truth)


def cmd_ccc(args):
    with stage("read"):
        x, y = load_series(args.pred, args.truth)
    with stage("ccc"):
        value = ccc(x, y)
        rho = pearson(x, y)
    print(f"ccc {value:.12g}")
    print(f"pearson {rho:.12g}")
    print(f"n {len(x)}")


def cmd_bench(args):
    backends = None if args.backends == "all" else [
        args.backends if args.backends != "auto" else _backend.active_name()
    ]
    with stage("bench"):
        report = run_bench(args.size, args.pairs, args.repeats, backends, args.alpha, args.iters, args.sigma)
    report["version"] = __version__
    print(format_table(report))
    if args.json:
        path = Path(args.json)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
        write_sidecar(args, path.with_name(path.name + ".run.json"))


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args):
    if args.in_frames:
        seq = _load(args, PHASE_SIZE)
    else:
        seq = expression_sequence(args.frames, args.size or PHASE_SIZE, seed=args.sequence_seed)
    with stage("sweep"):
        rows = robustness_sweep(seq, args.betas, args.pipeline, args.seeds, _spec(args),
                                args.sigma, args.alpha, args.iters)
    out = Path(args.out)
    with staged(out.parent if str(out.parent) else ".") as staging:
        (staging / out.name).write_text(report_csv(rows), encoding="utf-8")
        write_sidecar(args, staging / (out.name + ".run.json"))
    print(f"{'pipeline':<11} {'beta':>5} {'normalized_dev':>15}")
    for (pipeline, beta), dev in summarize(rows).items():
        print(f"{pipeline:<11} {beta:>5.2f} {dev:>15.6f}")


def cmd_replay(args):
    record = json.loads(Path(args.sidecar).read_text(encoding="utf-8"))
    command = record["command"]
    if command not in COMMANDS:
        raise ValidationError(f"{args.sidecar}: cannot replay command {command!r}")
    ns = argparse.Namespace(**record["config"])
    ns.command = command
    if args.out:
        ns.out = args.out
    if record.get("backend") in _backend.available():
        _backend.set_backend(record["backend"])
    return COMMANDS[command](ns)


COMMANDS = {
    "decompose": cmd_decompose, "phasediff": cmd_phasediff, "flow": cmd_flow,
    "corrupt": cmd_corrupt, "ccc": cmd_ccc, "bench": cmd_bench, "sweep": cmd_sweep,
}


def _add_pyramid(p):
    p.add_argument("--scales", type=int, default=2)
    p.add_argument("--orients", type=int, default=2)


def build_parser():
    parser = argparse.ArgumentParser(prog="phasemotion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--backend", choices=["auto", "cython", "python"], default=None,
                        help="kernel backend (default: PHASEMOTION_BACKEND or auto)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="pyramid amplitude/phase images and raw coefficients")
    p.add_argument("in_frames")
    _add_pyramid(p)
    p.add_argument("--size", type=int, default=None, help="resize frames to SIZE x SIZE first")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("phasediff", help="phase-difference snippet tensors")
    p.add_argument("in_frames")
    _add_pyramid(p)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--length", type=int, default=DEFAULT_LENGTH, help="frames per snippet")
    p.add_argument("--stride", type=int, default=None, help="frames between snippet starts (default: length)")
    p.add_argument("--size", type=int, default=PHASE_SIZE)
    p.add_argument("--no-resize", action="store_true")
    p.add_argument("--no-png", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phasediff)

    p = sub.add_parser("flow", help="Horn-Schunck flow for consecutive pairs")
    p.add_argument("in_frames")
    p.add_argument("--alpha", type=float, default=15.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("corrupt", help="per-frame gamma jitter")
    p.add_argument("in_frames")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("ccc", help="CCC and Pearson of two series")
    p.add_argument("pred", help="two-column CSV, or one-column predictions")
    p.add_argument("truth", nargs="?", default=None, help="one-column ground truth")
    p.set_defaults(func=cmd_ccc)

    p = sub.add_parser("bench", help="phase-difference vs Horn-Schunck timing")
    p.add_argument("--size", type=int, choices=[48, 224], default=224)
    p.add_argument("--pairs", type=int, default=4)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--alpha", type=float, default=15.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--backends", choices=["auto", "cython", "python", "all"], default="all",
                   help="kernel backends to time (default: every available one)")
    p.add_argument("--json", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="illumination robustness sweep")
    p.add_argument("in_frames", nargs="?", default=None,
                   help="frames to corrupt (default: built-in synthetic sequence)")
    _add_pyramid(p)
    p.add_argument("--betas", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--pipeline", choices=["both", "phase_diff", "flow"], default="both")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--alpha", type=float, default=15.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--size", type=int, default=PHASE_SIZE)
    p.add_argument("--no-resize", action="store_true")
    p.add_argument("--frames", type=int, default=100, help="synthetic sequence length")
    p.add_argument("--sequence-seed", type=int, default=0)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run a command from its run.json sidecar")
    p.add_argument("sidecar")
    p.add_argument("--out", default=None, help="override the recorded output location")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        _backend.set_backend(args.backend)
    try:
        args.func(args)
    except StageError as exc:
        print(f"phasemotion {args.command}: {exc}", file=sys.stderr)
        return 1
    except (PhaseMotionError, OSError, ValueError) as exc:
        print(f"phasemotion {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
