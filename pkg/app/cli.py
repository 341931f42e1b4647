# File: app/cli.py
"""
Command-line front end for the signing-tool workflow and the migration demo.

    python -m app.cli measure enclave.mimg
    python -m app.cli mainfo enclave.mimg
    python -m app.cli instrument a.mimg b.mimg --out signed/
    python -m app.cli instrument a.mimg --mainfo b.mainfo --out signed/
    python -m app.cli derive signed/a.mimg 1
    python -m app.cli demo signed/ --adversary tamper:1
    python -m app.cli bench --pages 1 10 100
"""

import argparse
import random
import secrets
import sys
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger

from .core.config.settings import settings
from .core.errors import GroupMismatchError, MageError, MeasurementMismatchError
from .core.logging import configure_logging
from .models.enclave import LoaderKind, Variant
from .models.mage import GroupManifestEntry, MageView
from .models.protocol import Adversary
from .services.attestation import platform_from_seed
from .services.image import read_image, write_image
from .services.image.generator import generate_image
from .services.mage.bench import bench_derivation, to_csv
from .services.mage.builder import (
    derive_mainfo,
    derive_split_mainfo,
    final_measurement,
    instrument,
    post_content_for,
)
from .services.mage.derive import derive_measurement, derive_measurement_split, merkle_derive
from .services.mage.merkle import decode_sidecar, encode_sidecar
from .services.mage.section import memory_overhead, pages_required
from .services.protocol import Channel, EnclaveRuntime, UntrustedHost, get_key_exchange, run_session
from .utils.records import dump_manifest, dump_mainfo, read_mainfo, read_manifest, to_hex

MANIFEST = "manifest.txt"
SIDECAR = "mainfo.sidecar"
EXIT_CODES = """exit codes:
  0  success
  2  usage
  3  malformed image, section or record
  4  capacity or group mismatch
  5  verification failure or protocol abort
  6  member index out of range
"""


def cmd_measure(args) -> int:
    img = read_image(args.image)
    print(to_hex(final_measurement(img, LoaderKind(args.loader))))
    return 0


def cmd_mainfo(args) -> int:
    img = read_image(args.image)
    variant = Variant.from_name(args.variant) if args.variant else img.variant
    mainfo = derive_split_mainfo(img) if variant == Variant.SPLIT else derive_mainfo(img)
    text = dump_mainfo(mainfo, variant)
    if args.out:
        Path(args.out).write_text(text)
        logger.info(f"💾 MAINFO written to {args.out}")
    print(text, end="")
    return 0


def cmd_instrument(args) -> int:
    paths = [Path(p) for p in args.images]
    if args.order == "sort-by-name":
        paths.sort(key=lambda p: p.name)
    variant = Variant.from_name(args.variant)
    peers = []
    for mainfo_path in args.mainfo or []:
        file_variant, record = read_mainfo(mainfo_path)
        if file_variant != variant:
            raise GroupMismatchError(f"{mainfo_path} holds a {file_variant.label} MAINFO, group is {variant.label}")
        peers.append(record)
    result = instrument([read_image(p) for p in paths], variant, peers)
    if peers:
        logger.info(f"🤝 {len(peers)} peer MAINFOs take indices {len(paths)}..{len(paths) + len(peers) - 1}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for index, (path, img) in enumerate(zip(paths, result.images)):
        write_image(out_dir / path.name, img)
        manifest.append(GroupManifestEntry(filename=path.name, measurement=final_measurement(img), index=index))
    (out_dir / MANIFEST).write_text(dump_manifest(manifest))
    if result.sidecar is not None:
        (out_dir / SIDECAR).write_bytes(encode_sidecar(result.sidecar))
    print(dump_manifest(manifest), end="")
    logger.info(f"✅ {len(manifest)} instrumented images written to {out_dir}")
    return 0


def _host_for(image_path: Path, sidecar: Optional[str], post_from: Optional[List[str]]) -> UntrustedHost:
    """Untrusted storage next to the image: the sidecar and C_post of listed members."""
    host = UntrustedHost()
    side = Path(sidecar) if sidecar else image_path.parent / SIDECAR
    if side.exists():
        host.sidecar = decode_sidecar(side.read_bytes())
    manifest_path = image_path.parent / MANIFEST
    if manifest_path.exists():
        for entry in read_manifest(manifest_path):
            member = image_path.parent / entry.filename
            if member.exists():
                host.post_contents[entry.index] = post_content_for(read_image(member))
    for spec in post_from or []:
        index, _, path = spec.partition("=")
        host.post_contents[int(index)] = post_content_for(read_image(path))
    return host


def _cross_check(manifest_path: Path, index: int, digest: bytes) -> None:
    """A derived measurement must agree with what the signing tool recorded."""
    if not manifest_path.exists():
        return
    for entry in read_manifest(manifest_path):
        if entry.index == index and entry.measurement != digest:
            raise MeasurementMismatchError(
                f"member {index} derives to {to_hex(digest)} but {entry.filename} was signed as {to_hex(entry.measurement)}"
            )


def cmd_derive(args) -> int:
    path = Path(args.image)
    img = read_image(path)
    view = MageView.from_image(img)
    if view.variant == Variant.BASIC:
        digest = derive_measurement(view, args.index)
    else:
        host = _host_for(path, args.sidecar, args.post_from)
        if view.variant == Variant.SPLIT:
            digest = derive_measurement_split(view, args.index, host.post_content(args.index))
        else:
            entry, proof = host.merkle_entry(args.index)
            digest = merkle_derive(view, args.index, entry, proof)
    _cross_check(path.parent / MANIFEST, args.index, digest)
    print(f"{args.index} {to_hex(digest)}")
    return 0


def _load_group(group_dir: Path) -> Dict[str, GroupManifestEntry]:
    return {e.filename: e for e in read_manifest(group_dir / MANIFEST)}


def cmd_demo(args) -> int:
    group_dir = Path(args.group_dir)
    members = _load_group(group_dir)
    names = sorted(members, key=lambda n: members[n].index)
    initiator_name = args.initiator or names[0]
    responder_name = args.responder or (names[1] if len(names) > 1 else names[0])

    platform = platform_from_seed(b"demo-platform")
    kex = get_key_exchange(args.kex or settings.KEY_EXCHANGE, seed=settings.FIXTURE_SEED)
    host = _host_for(group_dir / names[0], None, None)

    def launch(name: str) -> EnclaveRuntime:
        index = members[name].index if name in members else args.claim_index
        if name not in members:
            logger.warning(f"⚠️ {name} is not in the group manifest; it claims index {index}")
        return EnclaveRuntime(name, read_image(group_dir / name), platform, kex, index, host)

    a, b = launch(initiator_name), launch(responder_name)
    adversary = Adversary.parse(args.adversary)
    channel = Channel(adversary)
    secret = secrets.token_bytes(args.secret_size or settings.SECRET_SIZE)
    result = run_session(a, b, channel, secret, target_index=b.group_index)

    print(channel.export(kex.name), end="")
    print(f"A {a.name}: {result.initiator}")
    print(f"B {b.name}: {result.responder}")
    if result.migrated:
        print("secret migrated")
        return 0
    print("secret not migrated")
    return 5


def cmd_bench(args) -> int:
    points = bench_derivation(args.pages, args.repeats or settings.BENCH_REPEATS, args.entries)
    print(to_csv(points), end="")
    return 0


def cmd_generate(args) -> int:
    rng = random.Random(args.seed if args.seed is not None else settings.FIXTURE_SEED)
    out_dir = Path(args.out)
    variant = Variant.from_name(args.variant)
    for i in range(args.count):
        pages = rng.randint(args.min_pages, args.max_pages)
        position = args.mars_position if args.mars_position in ("start", "middle", "end") else int(args.mars_position)
        img = generate_image(rng, pages, mars_pages=args.mars_pages, mars_position=position, variant=variant)
        path = write_image(out_dir / f"{args.prefix}{i:02d}.mimg", img)
        print(path)
    return 0


def cmd_capacity(args) -> int:
    print("mars_pages,section_kb,total_kb,capacity")
    for pages in args.pages:
        o = memory_overhead(pages)
        print(f"{o.mars_pages},{o.section_kb},{o.total_kb},{o.capacity}")
    if args.members:
        print(f"# {args.members} MAINFOs need {pages_required(args.members)} pages")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mage",
        description="Mutual attestation toolkit for enclave groups",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="measurement of an image")
    p.add_argument("image")
    p.add_argument("--loader", choices=[k.value for k in LoaderKind], default=settings.DEFAULT_LOADER)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("mainfo", help="MAINFO record of an image")
    p.add_argument("image")
    p.add_argument("--variant", choices=[v.label for v in Variant])
    p.add_argument("-o", "--out", help="write the exchange file here as well")
    p.set_defaults(func=cmd_mainfo)

    p = sub.add_parser("instrument", help="fill the MARS of every group member")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--order", choices=["as-given", "sort-by-name"], default="sort-by-name")
    p.add_argument("--variant", choices=[v.label for v in Variant], default=settings.DEFAULT_VARIANT)
    p.add_argument(
        "--mainfo", action="append", metavar="FILE", help="exchange file of a peer whose image you do not hold"
    )
    p.set_defaults(func=cmd_instrument)

    p = sub.add_parser("derive", help="derive a member's measurement from an image's MARS")
    p.add_argument("image")
    p.add_argument("index", type=int)
    p.add_argument("--sidecar", help="Merkle sidecar (default: next to the image)")
    p.add_argument("--post-from", action="append", metavar="INDEX=IMAGE", help="C_post source for split groups")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("demo", help="run a secret migration between two group members")
    p.add_argument("group_dir")
    p.add_argument("--adversary", default="honest", help="honest | drop:N | replay:N | tamper:N[:BYTE]")
    p.add_argument("--initiator")
    p.add_argument("--responder")
    p.add_argument("--claim-index", type=int, default=0, help="index claimed by images outside the manifest")
    p.add_argument("--kex", choices=["ecdh", "modp-small"])
    p.add_argument("--secret-size", type=int)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("bench", help="derivation time per MARS size")
    p.add_argument("--pages", type=int, nargs="+", default=[1, 10, 100])
    p.add_argument("--repeats", type=int)
    p.add_argument("--entries", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write random fixture images")
    p.add_argument("out")
    p.add_argument("--count", type=int, default=2)
    p.add_argument("--min-pages", type=int, default=1)
    p.add_argument("--max-pages", type=int, default=8)
    p.add_argument("--mars-pages", type=int, default=settings.DEFAULT_MARS_PAGES)
    p.add_argument("--mars-position", default="end", help="start | middle | end | N")
    p.add_argument("--variant", choices=[v.label for v in Variant], default="basic")
    p.add_argument("--prefix", default="member_")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("capacity", help="MAINFO capacity and memory overhead")
    p.add_argument("--pages", type=int, nargs="+", default=[1, 10, 100, 1000, 10000])
    p.add_argument("--members", type=int)
    p.set_defaults(func=cmd_capacity)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging("DEBUG" if args.verbose else None)
    try:
        return args.func(args)
    except MageError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
