"""``amod`` command line: synth, extract, train, eval, visualize.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
"""
import argparse
import dataclasses
import sys
from pathlib import Path

import yaml

from . import evaluation
from .config import ConfigError, check_paths, load_config, parse_config
from .modality import make_bundle, write_bundle
from .net.checkpoint import load_checkpoint, save_checkpoint
from .net.train import NumericError, train
from .pipeline import eval_inputs, ordered_map, prepare_track, score_inputs
from .trackio import DataError, ProtocolSplit, generate_synthetic, load_split, load_track, materialize
from .visualize import save_chw, save_flow

# dev/test condition shift of each synthetic protocol relative to its train set
SYNTH_PROTOCOLS = {
    1: {"eval_motion_scale": 1.0, "eval_tone_shift": 0.0},
    2: {"eval_motion_scale": 1.5, "eval_tone_shift": 1.0},
    3: {"eval_motion_scale": 0.5, "eval_tone_shift": 1.0},
}


def _say(msg):
    print(msg, flush=True)


def _protocols(cfg, only):
    return [cfg.protocol(only)] if only is not None else list(cfg.protocols)


def _load_part(p, part):
    path = getattr(p, part)
    return load_split(path, root=path.parent)


def _load_protocol(p, parts=("train", "dev", "test")):
    tracks = {k: (_load_part(p, k) if k in parts else []) for k in ("train", "dev", "test")}
    return ProtocolSplit(tracks["train"], tracks["dev"], tracks["test"], p.id)


def cmd_synth(cfg, args):
    out = Path(args.out) if args.out else cfg.output_dir
    cfg.synth.validate()
    entries = []
    for pid, shift in SYNTH_PROTOCOLS.items():
        scfg = dataclasses.replace(cfg.synth, **shift)
        split = generate_synthetic(scfg, seed=cfg.seed, protocol_id=pid)
        materialize(split, out / f"protocol_{pid}")
        counts = {k: (sum(t.label for t in getattr(split, k)),
                      sum(1 - t.label for t in getattr(split, k))) for k in ("train", "dev", "test")}
        _say(f"protocol {pid}: " + ", ".join(f"{k} {r} real / {f} fake" for k, (r, f) in counts.items()))
        entries.append({"id": pid, **{k: f"protocol_{pid}/{k}.txt" for k in ("train", "dev", "test")}})
    doc = {"seed": cfg.seed, "data": {"root": ".", "protocols": entries},
           "synth": dataclasses.asdict(cfg.synth), "output": {"dir": "runs"}}
    with open(out / "config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)
    _say(f"wrote {out / 'config.yaml'}")
    return 0


def cmd_extract(cfg, args):
    check_paths(cfg, (args.split,))
    out = Path(args.out) if args.out else cfg.output_dir / "bundles"
    for p in _protocols(cfg, args.protocol):
        tracks = _load_part(p, args.split)
        d = out / f"protocol_{p.id}" / args.split
        d.mkdir(parents=True, exist_ok=True)

        def one(t):
            return make_bundle(prepare_track(t, cfg.modality), cfg.modality)

        for t, b in zip(tracks, ordered_map(one, tracks)):
            write_bundle(d / (t.id.replace("/", "__") + ".amod"), b)
        _say(f"protocol {p.id} {args.split}: {len(tracks)} bundles in {d}")
    return 0


def cmd_train(cfg, args):
    check_paths(cfg, ("train", "dev"))
    tcfg = cfg.train
    if args.modalities:
        tcfg = dataclasses.replace(tcfg, modalities=args.modalities)
    out = Path(args.out) if args.out else cfg.output_dir
    for p in _protocols(cfg, args.protocol):
        split = _load_protocol(p, ("train", "dev"))
        d = out / f"protocol_{p.id}"
        d.mkdir(parents=True, exist_ok=True)
        res = train(split, tcfg, seed=cfg.seed, log_path=d / "train_log.csv")
        save_checkpoint(d / "model.fusn", res.net, res.adam)
        final = f"{100 * res.dev_acer[-1]:.2f}%" if res.dev_acer else "n/a"
        _say(f"protocol {p.id}: {len(res.epoch_loss)} epochs, final dev ACER {final}")
    return 0


def _checkpoint_for(ck, pid):
    if ck.is_file():
        return ck
    path = ck / f"protocol_{pid}" / "model.fusn"
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return path


def _scored(net, tracks, modalities, cfg, what):
    if not tracks:
        raise evaluation.EvalError(f"{what} list is empty")
    scores = score_inputs(net, eval_inputs(tracks, modalities, cfg.modality))
    return evaluation.ScoredSet([t.id for t in tracks], scores, [t.label for t in tracks])


def cmd_eval(cfg, args):
    check_paths(cfg, ("dev", "test"))
    ck = Path(args.checkpoint) if args.checkpoint else cfg.output_dir
    if not ck.exists():
        raise FileNotFoundError(f"checkpoint not found: {ck}")
    out = Path(args.out) if args.out else (ck.parent if ck.is_file() else ck)
    results = []
    for p in _protocols(cfg, args.protocol):
        net, _ = load_checkpoint(_checkpoint_for(ck, p.id))
        modalities = "raw_pair" if net.branches[0][0] == "raw_pair" else "full"
        split = _load_protocol(p, ("dev", "test"))
        dev = _scored(net, split.dev, modalities, cfg, f"protocol {p.id} dev")
        test = _scored(net, split.test, modalities, cfg, f"protocol {p.id} test")
        d = out / f"protocol_{p.id}"
        d.mkdir(parents=True, exist_ok=True)
        evaluation.write_scores(d / "scores_dev.csv", dev)
        evaluation.write_scores(d / "scores_test.csv", test)
        results.append(evaluation.evaluate_split(p.id, dev, test, cfg.threshold_rule))
    report = evaluation.evaluate_protocols(results)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_report(report, out / "report.json", out / "report.txt")
    _say(report.table().rstrip())
    return 0


def cmd_visualize(cfg, args):
    if not args.track:
        raise ConfigError("visualize needs --track DIR")
    out = Path(args.out) if args.out else cfg.output_dir / "visualize"
    out.mkdir(parents=True, exist_ok=True)
    track = load_track(args.track, 1, track_id=str(args.track))
    t16 = prepare_track(track, cfg.modality)
    b = make_bundle(t16, cfg.modality)
    save_chw(out / "rp_c1000.png", b.rp_c1000)
    save_chw(out / "rp_c1.png", b.rp_c1)
    save_flow(out / "flow_far.png", b.flow_far)
    save_flow(out / "flow_near.png", b.flow_near)
    for i, frame in enumerate(t16.frames):
        save_chw(out / f"frame_{i:02d}.png", frame.transpose(2, 0, 1))
    _say(f"wrote {4 + len(t16)} images to {out}")
    return 0


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "train": cmd_train,
            "eval": cmd_eval, "visualize": cmd_visualize}


def build_parser():
    ap = argparse.ArgumentParser(prog="amod", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="YAML run config (optional for synth)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--protocol", type=int, help="restrict to one protocol id")
    ap.add_argument("--split", choices=("train", "dev", "test"), default="test",
                    help="split for extract (default: test)")
    ap.add_argument("--modalities", choices=("full", "raw_pair"), help="override train.modalities")
    ap.add_argument("--checkpoint", help="checkpoint file or directory of protocol_<k>/ (eval)")
    ap.add_argument("--track", help="track directory (visualize)")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.command == "synth":
            cfg = parse_config({})
        else:
            raise ConfigError(f"{args.command} needs --config")
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed must lie in [0, 2^64)")
            cfg.seed = args.seed
        _say(f"config hash {cfg.digest()}")
        return COMMANDS[args.command](cfg, args)
    except (DataError, evaluation.EvalError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

if __name__ == "__main__":
    sys.exit(main())
