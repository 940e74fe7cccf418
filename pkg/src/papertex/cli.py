"""Command-line interface: ``papertex <command> ...``.

Exit codes: 0 success/accept, 1 reject, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import imageio
from .dataset import evaluate_directory
from .errors import PaperTexError
from .fuzzyauth.protocol import (
    CommitmentRecord,
    load_private_key,
    load_public_key,
    register,
    verify,
    write_keypair,
)
from .prep import prepare
from .store import TemplateStore, enroll, identify, verify_claim
from .texture import (
    Fingerprint,
    GaborParams,
    fingerprint_from_prepared,
    fractional_hamming,
    read_fingerprint,
    write_fingerprint,
)

EXIT_OK, EXIT_REJECT, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

_COMMON_DEFAULTS = {
    "scale": 5,
    "orient": 7,
    "fmax": 0.25,
    "eta": math.sqrt(2),
    "gamma": math.sqrt(2),
    "sigma": 1.0,
    "threshold": 0.4,
    "kernel_size": 100,
    "envelope": "scaled",
    "min_area": 100,
}


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def d(key):
        return argparse.SUPPRESS if suppress else _COMMON_DEFAULTS[key]

    g = parser.add_argument_group("filter and decision parameters")
    g.add_argument("--scale", type=int, default=d("scale"), help="Gabor scale index (default 5)")
    g.add_argument("--orient", type=int, default=d("orient"), help="Gabor orientation index (default 7)")
    g.add_argument("--fmax", type=float, default=d("fmax"), help="maximum frequency (default 0.25)")
    g.add_argument("--eta", type=float, default=d("eta"), help="envelope sharpness along the wave")
    g.add_argument("--gamma", type=float, default=d("gamma"), help="envelope sharpness across the wave")
    g.add_argument("--sigma", type=float, default=d("sigma"), help="envelope width factor (default 1)")
    g.add_argument("--kernel-size", type=int, default=d("kernel_size"), help="kernel side in pixels")
    g.add_argument("--envelope", choices=("scaled", "fixed"), default=d("envelope"),
                   help="Gaussian envelope form (default scaled)")
    g.add_argument("--threshold", type=float, default=d("threshold"), help="accept if HD <= threshold")
    g.add_argument("--min-area", type=int, default=d("min_area"),
                   help="minimum dark component area in pixels (default 100)")


def _params(args) -> GaborParams:
    return GaborParams(
        fmax=args.fmax,
        scale=args.scale,
        orientation=args.orient,
        eta=args.eta,
        gamma=args.gamma,
        sigma=args.sigma,
        kernel_size=args.kernel_size,
        envelope=args.envelope,
    )


def _load_probe(path: str, args) -> Fingerprint:
    """A ``.ptfp`` file is read as is; anything else is treated as a capture."""
    if Path(path).suffix.lower() == ".ptfp":
        return read_fingerprint(path)
    prepared = prepare(imageio.read_capture(path), args.min_area)
    return fingerprint_from_prepared(prepared, _params(args))


def _emit(**fields) -> None:
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        print(f"{key}={value}")


def cmd_extract(args) -> int:
    capture = imageio.read_capture(args.capture)
    prepared = prepare(capture, args.min_area)
    fp = fingerprint_from_prepared(prepared, _params(args))
    fp.meta["source"] = Path(args.capture).name
    fp.meta["rotation"] = f"{prepared.rotation_applied:.4f}"
    write_fingerprint(args.output, fp)
    if args.dump_prep:
        prefix = Path(args.dump_prep)
        imageio.write_pgm16(prefix.with_suffix(".pgm"), prepared.samples)
        imageio.write_pbm(prefix.with_suffix(".pbm"), prepared.mask)
    _emit(output=args.output, rotation=prepared.rotation_applied, valid_bits=int(fp.mask.sum()))
    return EXIT_OK


def cmd_compare(args) -> int:
    hd = fractional_hamming(_load_probe(args.a, args), _load_probe(args.b, args))
    accepted = hd <= args.threshold
    _emit(hd=hd, threshold=args.threshold, decision="accept" if accepted else "reject")
    return EXIT_OK if accepted else EXIT_REJECT


def cmd_enroll(args) -> int:
    store = TemplateStore(args.store)
    tid = enroll(store, _load_probe(args.capture, args), args.id)
    _emit(enrolled=tid, store=args.store)
    return EXIT_OK


def cmd_verify(args) -> int:
    store = TemplateStore(args.store, create=False)
    res = verify_claim(store, _load_probe(args.capture, args), args.id, args.threshold)
    _emit(id=args.id, hd=res.hd, threshold=args.threshold,
          decision="accept" if res.accepted else "reject")
    return EXIT_OK if res.accepted else EXIT_REJECT


def cmd_identify(args) -> int:
    store = TemplateStore(args.store, create=False)
    res = identify(store, _load_probe(args.capture, args), args.threshold, dof=args.dof)
    _emit(
        match=res.match or "none",
        hd=res.hd,
        threshold=args.threshold,
        templates=res.candidates,
        pairwise_far=res.pairwise_far,
        accumulated_far=res.accumulated_far,
    )
    return EXIT_OK if res.accepted else EXIT_REJECT


def cmd_evaluate(args) -> int:
    report = evaluate_directory(
        args.dataset,
        args.report,
        args.csv,
        threshold=args.threshold,
        extract=args.extract,
        params=_params(args),
        masked_puf=args.masked_puf,
    )
    if args.report is None:
        sys.stdout.write(report.to_text())
    else:
        _emit(report=args.report, csv=args.csv or "")
    return EXIT_OK


def cmd_register(args) -> int:
    fp = _load_probe(args.capture, args)
    record, _ = register(fp, load_private_key(args.signing_key))
    text = record.to_text()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        _emit(record=args.output, signer=record.signer)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_authenticate(args) -> int:
    record = CommitmentRecord.from_text(Path(args.record).read_text(encoding="utf-8"))
    result = verify(_load_probe(args.capture, args), record, load_public_key(args.verify_key))
    _emit(decision="accept" if result.ok else "reject", reason=result.reason or "ok")
    return EXIT_OK if result.ok else EXIT_REJECT


def cmd_keygen(args) -> int:
    _emit(signer=write_keypair(args.private, args.public), private=args.private, public=args.public)
    return EXIT_OK


def cmd_synth(args) -> int:
    from . import synth

    if args.from_manifest:
        manifest = synth.regenerate(args.from_manifest, args.output)
    else:
        manifest = synth.generate_dataset(
            args.sheets,
            args.samples,
            args.output,
            seed=args.seed,
            resolution=(args.width, args.height),
            max_rotation=args.max_rotation,
            noise_sigma=args.noise,
            scribble_area_fraction=args.scribble,
        )
    _emit(manifest=manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="papertex", description="Paper texture fingerprinting and authentication."
    )
    _add_common(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("extract", cmd_extract, "extract a fingerprint from a capture")
    p.add_argument("capture")
    p.add_argument("-o", "--output", required=True, help="output .ptfp path")
    p.add_argument("--dump-prep", metavar="PREFIX",
                   help="also write the prepared image (PREFIX.pgm, 16 bit) and mask (PREFIX.pbm)")

    p = add("compare", cmd_compare, "fractional Hamming distance between two fingerprints or captures")
    p.add_argument("a")
    p.add_argument("b")

    for name, func, help_ in (
        ("enroll", cmd_enroll, "add a template to the store"),
        ("verify", cmd_verify, "one-to-one check against a claimed template"),
    ):
        p = add(name, func, help_)
        p.add_argument("capture")
        p.add_argument("--store", required=True, help="template store directory")
        p.add_argument("--id", required=True, help="template id")

    p = add("identify", cmd_identify, "one-to-many search over the store")
    p.add_argument("capture")
    p.add_argument("--store", required=True, help="template store directory")
    p.add_argument("--dof", type=int, default=807,
                   help="degrees of freedom for the pairwise FAR estimate (default 807)")

    p = add("evaluate", cmd_evaluate, "biometric and PUF metrics for a dataset tree")
    p.add_argument("dataset", help="directory of <sheet-id>/<sample-id>.ptfp files")
    p.add_argument("--report", help="key=value report path (stdout if omitted)")
    p.add_argument("--csv", help="pairwise distance CSV path")
    p.add_argument("--extract", action="store_true", help="dataset holds captures, not .ptfp files")
    p.add_argument("--masked-puf", action="store_true",
                   help="PUF metrics only over bits valid in every mask")

    p = add("register", cmd_register, "bind a fresh key to a fingerprint and emit a PTCR1 record")
    p.add_argument("capture")
    p.add_argument("--signing-key", required=True, help="Ed25519 private key (PEM)")
    p.add_argument("-o", "--output", help="record path (stdout if omitted)")

    p = add("authenticate", cmd_authenticate, "check a capture against a PTCR1 record")
    p.add_argument("capture")
    p.add_argument("record")
    p.add_argument("--verify-key", required=True, help="Ed25519 public key (PEM)")

    p = add("keygen", cmd_keygen, "create an Ed25519 signing key pair")
    p.add_argument("--private", required=True)
    p.add_argument("--public", required=True)

    p = add("synth", cmd_synth, "generate a synthetic capture dataset")
    p.add_argument("output", help="output directory")
    p.add_argument("--sheets", type=int, default=50)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=2400)
    p.add_argument("--height", type=int, default=3300)
    p.add_argument("--max-rotation", type=float, default=12.0)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--scribble", type=float, default=0.0, help="scribble area fraction")
    p.add_argument("--from-manifest", help="re-render an existing manifest instead")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (PaperTexError, ValueError, OSError) as exc:
        print(f"papertex: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"papertex: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
