"""Command-line driver for the full pipeline.

Subcommands: ``gen`` (dataset generation), ``train``, ``eval``, ``sweep``
(accuracy vs SNR for both receivers), ``size-sweep`` (architecture
comparison), ``decode`` (per-instance UCI on stdout), ``ingest`` (IQ
capture to dataset). Flags mirror library config keys one-to-one; a
``key=value`` config file can preset any flag and explicit flags win.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure. Every command is reproducible: identical flags and seeds give
byte-identical outputs; wall-clock timestamps appear only in the sidecar
``*.manifest.json`` files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from . import dataset as ds
from . import evaluate as ev
from . import mlp
from .channel import ChannelConfig, ChannelProfile
from .fileio import FileFormatError, NumericalError
from .pucch0 import Pucch0Config, UciFormat, candidate_shifts, mcs_to_uci

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_FORMATS = {f.value: f for f in UciFormat}
_PROFILES = {p.value: p for p in ChannelProfile}


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _write_manifest(out_path: str, payload: dict) -> None:
    payload = dict(payload, timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))
    with open(f"{out_path}.manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_manifest(path: str) -> dict | None:
    try:
        with open(f"{path}.manifest.json") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None


def _add_pucch_flags(p: argparse.ArgumentParser, with_slots: bool) -> None:
    p.add_argument("--m0", type=int, default=0, help="initial cyclic shift (default 0)")
    p.add_argument("--start-symbol", type=int, default=13)
    p.add_argument("--num-symbols", type=int, default=1, choices=(1, 2))
    p.add_argument("--hopping-id", type=int, default=0)
    p.add_argument("--group-u", type=int, default=0)
    p.add_argument("--format", default="harq1+sr", choices=sorted(_FORMATS),
                   help="UCI payload layout (default harq1+sr)")
    if with_slots:
        p.add_argument("--slots", type=_int_list, default=[13, 14],
                       help="comma-separated slot numbers (default 13,14)")


def _add_channel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--channel", default="tdlc", choices=sorted(_PROFILES))
    p.add_argument("--delay-spread-ns", type=float, default=300.0)
    p.add_argument("--scs-hz", type=float, default=30e3)


def _pucch_cfg(args, slot: int = 13) -> Pucch0Config:
    return Pucch0Config(
        m0=args.m0, slot=slot, start_symbol=args.start_symbol,
        num_symbols=args.num_symbols, hopping_id=args.hopping_id,
        group_u=args.group_u)


def _channel_cfg(args, seed: int) -> ChannelConfig:
    return ChannelConfig(
        profile=_PROFILES[args.channel],
        delay_spread=args.delay_spread_ns * 1e-9,
        subcarrier_spacing=args.scs_hz,
        seed=seed)


def _check_tags(dataset: ds.LabeledDataset, manifest: dict | None, what: str) -> None:
    if manifest is None:
        return
    for key, have in (("feat_tag", dataset.feat_tag), ("norm_tag", dataset.norm_tag)):
        want = manifest.get(key)
        if want is not None and want != have:
            raise FileFormatError(
                f"{what}: dataset {key}={have} does not match model {key}={want}; "
                f"refusing to mix featurizations")


def cmd_gen(args) -> int:
    cfg = _pucch_cfg(args)
    data = ds.generate_dataset(
        count=args.count, snr_db=args.snr_db,
        channel_cfg=_channel_cfg(args, args.seed), seed=args.seed,
        slots=tuple(args.slots), fmt=_FORMATS[args.format], pucch=cfg,
        normalize=args.normalize)
    ds.write_dataset(data, args.out)
    if args.csv:
        ds.write_csv(data, args.csv)
    _write_manifest(args.out, {
        "command": "gen", "count": args.count, "snr_db": str(args.snr_db),
        "channel": args.channel, "delay_spread_ns": args.delay_spread_ns,
        "slots": args.slots, "m0": args.m0, "start_symbol": args.start_symbol,
        "num_symbols": args.num_symbols, "hopping_id": args.hopping_id,
        "group_u": args.group_u, "format": args.format, "seed": args.seed,
        "feat_tag": data.feat_tag, "norm_tag": data.norm_tag,
    })
    print(f"wrote {len(data)} instances to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    data = ds.read_dataset(args.data)
    train_set, val_set = ds.split(data, args.train_frac, seed=args.seed)
    dims = [data.features.shape[1], *args.hidden, data.class_count]
    model = mlp.init_model(dims, seed=args.seed, dropout_p=args.dropout)
    cfg = mlp.TrainConfig(
        epochs=args.epochs, learning_rate=args.lr, momentum=args.momentum,
        batch_size=args.batch, seed=args.seed, dropout_p=args.dropout,
        dropout_input=args.dropout_input)
    model, history = mlp.train(model, train_set, val_set, cfg)
    mlp.save_model(model, args.out)

    history_path = args.history or f"{args.out}.history.csv"
    with open(history_path, "w") as fh:
        fh.write("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n")
        for i in range(len(history)):
            fh.write(f"{i + 1},{history.train_loss[i]!r},{history.train_accuracy[i]!r},"
                     f"{history.val_loss[i]!r},{history.val_accuracy[i]!r}\n")

    data_manifest = _read_manifest(args.data) or {}
    _write_manifest(args.out, {
        "command": "train", "data": args.data, "epochs": args.epochs,
        "lr": args.lr, "momentum": args.momentum, "batch": args.batch,
        "seed": args.seed, "dropout": args.dropout,
        "dropout_input": args.dropout_input, "train_frac": args.train_frac,
        "layer_dims": dims, "feat_tag": data.feat_tag, "norm_tag": data.norm_tag,
        "data_seed": data_manifest.get("seed"),
        "model_hash": ev.model_hash(model),
    })
    print(f"trained {len(history)} epochs; "
          f"final val accuracy {history.val_accuracy[-1]:.4f}; "
          f"model {ev.model_hash(model)} -> {args.out}")
    return EXIT_OK


def _load_model_checked(model_path: str, data: ds.LabeledDataset):
    model = mlp.load_model(model_path)
    manifest = _read_manifest(model_path)
    _check_tags(data, manifest, "model/dataset compatibility")
    return model, manifest


def cmd_eval(args) -> int:
    data = ds.read_dataset(args.data)
    if (data.labels == ds.UNLABELED).any():
        raise FileFormatError("dataset holds unlabeled instances; cannot score")
    fmt = _FORMATS[args.format]
    outputs = []
    if args.rx in ("nn", "both"):
        if not args.model:
            raise _UsageError("--model is required for --rx nn")
        model, _ = _load_model_checked(args.model, data)
        outputs.append(("nn", ev.nn_predict(model, data)))
    if args.rx in ("dft", "both"):
        outputs.append(("dft", ev.dft_predict(data, _pucch_cfg(args), fmt)))
    for name, pred in outputs:
        acc = ev.accuracy(pred, data.labels)
        print(f"decoder={name} accuracy={acc!r} n={len(data)}")
        if args.confusion_out:
            matrix = ev.confusion(pred, data.labels, data.class_count)
            path = (args.confusion_out if len(outputs) == 1
                    else f"{args.confusion_out}.{name}")
            with open(path, "w") as fh:
                fh.write(ev.confusion_csv(matrix))
    return EXIT_OK


def cmd_sweep(args) -> int:
    fmt = _FORMATS[args.format]
    test_sets: dict[float, ds.LabeledDataset] = {}
    for i, snr in enumerate(args.snrs):
        test_sets[snr] = ds.generate_dataset(
            count=args.test_count, snr_db=snr,
            channel_cfg=_channel_cfg(args, args.seed + i), seed=args.seed + i,
            slots=tuple(args.slots), fmt=fmt, pucch=_pucch_cfg(args),
            normalize=args.normalize)
    model = mlp.load_model(args.model)
    manifest = _read_manifest(args.model)
    _check_tags(next(iter(test_sets.values())), manifest, "sweep")
    train_seed = args.train_seed
    if train_seed is None and manifest:
        train_seed = manifest.get("data_seed")
    result = ev.sweep(model, _pucch_cfg(args), fmt, test_sets, train_seed=train_seed)
    paths = ev.write_sweep_files(result, args.out)
    _write_manifest(args.out, {
        "command": "sweep", "model": args.model, "snrs": args.snrs,
        "test_count": args.test_count, "seed": args.seed,
        "channel": args.channel, "train_seed": train_seed,
        "model_hash": result.model_hash,
    })
    for snr, dec, acc, n in result.rows:
        print(f"snr={ev.format_db(snr)} decoder={dec} accuracy={acc!r} n={n}")
    print("wrote " + ", ".join(paths))
    return EXIT_OK


def cmd_size_sweep(args) -> int:
    fmt = _FORMATS[args.format]
    data = ds.read_dataset(args.data)
    train_set, val_set = ds.split(data, args.train_frac, seed=args.seed)
    test_sets = {
        snr: ds.generate_dataset(
            count=args.test_count, snr_db=snr,
            channel_cfg=_channel_cfg(args, args.seed + 1 + i), seed=args.seed + 1 + i,
            slots=tuple(args.slots), fmt=fmt, pucch=_pucch_cfg(args),
            normalize=args.normalize)
        for i, snr in enumerate(args.snrs)
    }
    cfg = mlp.TrainConfig(
        epochs=args.epochs, learning_rate=args.lr, momentum=args.momentum,
        batch_size=args.batch, seed=args.seed, dropout_p=args.dropout)
    configs = [_int_list(c) for c in args.configs.split(";") if c.strip()]
    results = ev.size_sweep(configs, train_set, val_set, test_sets, cfg,
                            _pucch_cfg(args), fmt, init_seed=args.seed)
    summary = ["config,snr_db,decoder,accuracy,n"]
    for name, result in results.items():
        ev.write_sweep_files(result, f"{args.out}_{name}")
        for snr, dec, acc, n in result.rows:
            summary.append(f"{name},{ev.format_db(snr)},{dec},{acc!r},{n}")
            print(f"config={name} snr={ev.format_db(snr)} decoder={dec} "
                  f"accuracy={acc!r}")
    with open(f"{args.out}.csv", "w") as fh:
        fh.write("\n".join(summary) + "\n")
    _write_manifest(args.out, {
        "command": "size-sweep", "data": args.data, "configs": args.configs,
        "snrs": args.snrs, "test_count": args.test_count, "seed": args.seed,
    })
    return EXIT_OK


def cmd_decode(args) -> int:
    data = ds.read_dataset(args.data)
    fmt = _FORMATS[args.format]
    candidates = candidate_shifts(fmt)
    if args.rx == "nn":
        if not args.model:
            raise _UsageError("--model is required for --rx nn")
        model, _ = _load_model_checked(args.model, data)
        pred = ev.nn_predict(model, data)
    else:
        pred = ev.dft_predict(data, _pucch_cfg(args), fmt)
    for i, cls in enumerate(pred):
        m_cs = candidates[cls]
        uci = mcs_to_uci(fmt, m_cs)
        harq = "".join(str(b) for b in uci.harq_bits) or "-"
        sr = {True: "positive", False: "negative"}[uci.sr]
        print(f"{i} m_cs={m_cs} harq={harq} sr={sr}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    params = ds.OfdmParams(
        fft_size=args.fft_size, cp_lengths=tuple(args.cp),
        subcarrier_offset=args.k0)
    data = ds.ingest_iq(
        args.iq, params, slots=args.slot, start_symbols=args.start_symbol,
        snr_db=args.snr_db, class_count=args.class_count,
        normalize=args.normalize)
    ds.write_dataset(data, args.out)
    _write_manifest(args.out, {
        "command": "ingest", "iq": args.iq, "fft_size": args.fft_size,
        "cp": args.cp, "k0": args.k0, "slot": args.slot,
        "start_symbol": args.start_symbol,
    })
    print(f"ingested {len(data)} instances from {args.iq} to {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="pucch0lab",
                     description="PUCCH Format 0 link laboratory")
    parser.add_argument("--config", help="key=value file presetting any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate a labeled dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--snr-db", type=float, default=10.0,
                   help="per-RE SNR in dB; inf = noiseless")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also export instances as CSV")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    _add_channel_flags(p)
    _add_pucch_flags(p, with_slots=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the neural receiver")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--dropout-input", action=argparse.BooleanOptionalAction,
                   default=False, help="also apply dropout to the raw input")
    p.add_argument("--train-frac", type=float, default=0.75)
    p.add_argument("--hidden", type=_int_list, default=[128, 128],
                   help="hidden layer sizes, e.g. 128,128")
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="history CSV path (default <out>.history.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score receivers on a labeled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--rx", choices=("nn", "dft", "both"), default="both")
    p.add_argument("--model")
    p.add_argument("--confusion-out", help="write confusion matrix CSV here")
    _add_pucch_flags(p, with_slots=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="accuracy vs SNR for both receivers")
    p.add_argument("--model", required=True)
    p.add_argument("--snrs", type=lambda s: [float(x) for x in s.split(",")],
                   default=[0.0, 5.0, 10.0, 15.0, 20.0])
    p.add_argument("--test-count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=1000)
    p.add_argument("--train-seed", type=int,
                   help="generation seed of the training data (leakage guard)")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    _add_channel_flags(p)
    _add_pucch_flags(p, with_slots=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("size-sweep", help="compare network architectures")
    p.add_argument("--data", required=True)
    p.add_argument("--configs", default="128,128;32,32",
                   help="semicolon-separated hidden layer lists")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--train-frac", type=float, default=0.75)
    p.add_argument("--snrs", type=lambda s: [float(x) for x in s.split(",")],
                   default=[0.0, 5.0, 10.0, 15.0, 20.0])
    p.add_argument("--test-count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    _add_channel_flags(p)
    _add_pucch_flags(p, with_slots=True)
    p.set_defaults(func=cmd_size_sweep)

    p = sub.add_parser("decode", help="print per-instance decoded UCI")
    p.add_argument("--data", required=True)
    p.add_argument("--rx", choices=("nn", "dft"), default="dft")
    p.add_argument("--model")
    _add_pucch_flags(p, with_slots=False)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("ingest", help="convert an IQ capture to a dataset")
    p.add_argument("--iq", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fft-size", type=int, default=256)
    p.add_argument("--cp", type=_int_list, default=[18],
                   help="cyclic prefix length(s), cycled per symbol")
    p.add_argument("--k0", type=int, default=0, help="subcarrier offset")
    p.add_argument("--slot", type=int, default=13)
    p.add_argument("--start-symbol", type=int, default=13)
    p.add_argument("--snr-db", type=float, default=float("nan"),
                   help="recorded SNR metadata (NaN = unknown)")
    p.add_argument("--class-count", type=int, default=4)
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_ingest)

    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Insert config-file tokens after the subcommand so real flags win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    try:
        path = argv[at + 1]
    except IndexError:
        raise _UsageError("--config needs a file path")
    tokens = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"config line without '=': {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "false"):
                tokens.append(flag if value.lower() == "true"
                              else "--no-" + flag[2:])
            else:
                tokens.extend([flag, value])
    rest = argv[:at] + argv[at + 2:]
    if not rest:
        raise _UsageError("a subcommand is required")
    return [rest[0], *tokens, *rest[1:]]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
