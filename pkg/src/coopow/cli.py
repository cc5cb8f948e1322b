"""``coopow`` command line: keys, mining, verification, vectors, simulation.

Exit codes: 0 success, 1 domain failure (invalid block, exhausted search),
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from coopow import vectors
from coopow.blocks import (
    Entry,
    ProofParams,
    decode_block,
    encode_block,
    extract_entries,
    is_proved,
    render_block,
    validate,
)
from coopow.crypto import DecodeError, KeyPair
from coopow.miner import STRATEGIES, MiningExhausted, SequenceSearchPlan, mine_basic, mine_compound
from coopow.simnet import ConfigError, SimConfig, load_config, run, scenario_library

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _params(args) -> ProofParams:
    try:
        return ProofParams(args.z, args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _seed(args, out) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=out)
    return args.seed


def load_key(path) -> KeyPair:
    data = json.loads(Path(path).read_text())
    kp = KeyPair.from_secret(bytes.fromhex(data["secret"]))
    if kp.public.hex() != data.get("public", kp.public.hex()):
        raise DecodeError(f"{path}: public key does not match secret")
    return kp


def read_block(path):
    return decode_block(Path(path).read_bytes())


def cmd_keygen(args, out) -> int:
    kp = KeyPair.from_seed(_seed(args, out))
    Path(args.out).write_text(json.dumps({"public": kp.public.hex(), "secret": kp.secret.hex()}) + "\n")
    print(f"public: {kp.public.hex()}", file=out)
    return EXIT_OK


def cmd_mine_basic(args, out) -> int:
    params = _params(args)
    if args.payload_file is not None:
        payload = Path(args.payload_file).read_bytes()
    else:
        try:
            payload = bytes.fromhex(args.payload_hex)
        except ValueError as exc:
            raise UsageError(f"--payload-hex: {exc}") from exc
    kp = load_key(args.key)
    try:
        outcome = mine_basic(Entry(payload), kp, params, args.start_nonce, args.max_attempts)
    except MiningExhausted as exc:
        resume = f"; resume with --start-nonce {exc.next_nonce}" if exc.next_nonce is not None else ""
        print(f"exhausted: {exc}{resume}", file=out)
        return EXIT_FAIL
    Path(args.out).write_bytes(encode_block(outcome.block))
    print(f"ch: {outcome.block.ch.hex()}", file=out)
    print(f"nonce: {outcome.block.nonce}", file=out)
    print(f"attempts: {outcome.attempts}", file=out)
    return EXIT_OK


def _pool_files(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.blk")) if p.is_dir() else [p])
    return files


def cmd_mine_compound(args, out) -> int:
    params = _params(args)
    kp = load_key(args.key)
    pool = []
    for f in _pool_files(args.pool):
        b = read_block(f)
        if not is_proved(b, params):
            print(f"pool block {f} is not proved", file=out)
            return EXIT_FAIL
        pool.append(b)
    seed = _seed(args, out) if args.strategy == "random" else (args.seed or 0)
    try:
        plan = SequenceSearchPlan(pool, args.strategy, seed)
        outcome = mine_compound(plan, kp, params, args.max_attempts)
    except ValueError as exc:
        print(f"bad pool: {exc}", file=out)
        return EXIT_FAIL
    except MiningExhausted as exc:
        print(f"exhausted: {exc}", file=out)
        return EXIT_FAIL
    Path(args.out).write_bytes(encode_block(outcome.block))
    print(f"ch: {outcome.block.ch.hex()}", file=out)
    print(f"level: {outcome.block.level}", file=out)
    print(f"attempts: {outcome.attempts}", file=out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    params = _params(args)
    try:
        b = read_block(args.path)
    except OSError as exc:
        print(f"unreadable: {exc}", file=out)
        return EXIT_FAIL
    except DecodeError as exc:
        print(f"decode error: {exc}", file=out)
        return EXIT_FAIL
    report = validate(b, params, check_signatures=args.check_signatures)
    print(report, file=out)
    print(f"ch: {b.ch.hex()}", file=out)
    if args.tree:
        print(render_block(b), file=out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_extract(args, out) -> int:
    try:
        b = read_block(args.path)
    except (OSError, DecodeError) as exc:
        print(f"decode error: {exc}", file=out)
        return EXIT_FAIL
    for e in extract_entries(b):
        print(f"{e.entry_id.hex()} {e.payload.hex()}", file=out)
    return EXIT_OK


def cmd_vectors(args, out) -> int:
    for p in vectors.write_vectors(args.out):
        print(p, file=out)
    return EXIT_OK


def _simulate_one(config: SimConfig, out_dir: Path) -> tuple[int, bool]:
    report = run(config)
    report.write(out_dir)
    return config.seed, report.convergence


def cmd_simulate(args, out) -> int:
    if (args.config is None) == (args.scenario is None):
        raise UsageError("give exactly one of --config or --scenario")
    try:
        if args.config is not None:
            if not Path(args.config).is_file():
                raise UsageError(f"config file not found: {args.config}")
            config = load_config(args.config)
        else:
            library = scenario_library()
            if args.scenario not in library:
                raise UsageError(f"unknown scenario {args.scenario!r}; choose from {sorted(library)}")
            config = library[args.scenario]
        if args.seed is not None:
            config = SimConfig.from_dict({**config.to_dict(), "seed": args.seed})
    except ConfigError as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    out_dir = Path(args.out)
    if args.sweep <= 1:
        _, converged = _simulate_one(config, out_dir)
        print(f"convergence: {str(converged).lower()}", file=out)
        return EXIT_OK
    configs = [SimConfig.from_dict({**config.to_dict(), "seed": config.seed + k}) for k in range(args.sweep)]
    dirs = [out_dir / f"seed-{c.seed}" for c in configs]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_simulate_one, configs, dirs))
    for seed, converged in results:
        print(f"seed {seed} convergence: {str(converged).lower()}", file=out)
    print(f"convergence: {str(all(c for _, c in results)).lower()}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def proof_flags(p, d_required=False):
        p.add_argument("--z", type=int, required=True, help="zero-bit threshold")
        p.add_argument("--d", type=int, default=2, required=d_required, help="sub-blocks per compound block")

    p = sub.add_parser("keygen", help="create an Ed25519 key file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("mine-basic", help="mine a proved basic block for one entry")
    p.add_argument("--key", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--payload-file")
    src.add_argument("--payload-hex")
    proof_flags(p)
    p.add_argument("--start-nonce", type=int, default=0)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine_basic)

    p = sub.add_parser("mine-compound", help="mine a compound block from a pool of .blk files")
    p.add_argument("--key", required=True)
    p.add_argument("--pool", nargs="+", required=True, help=".blk files or directories of them")
    proof_flags(p)
    p.add_argument("--strategy", choices=STRATEGIES, default="exhaustive")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine_compound)

    p = sub.add_parser("verify", help="validate a .blk file")
    p.add_argument("path")
    proof_flags(p)
    p.add_argument("--check-signatures", action="store_true")
    p.add_argument("--tree", action="store_true", help="also print the block tree")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("extract", help="list the entries contained in a .blk file")
    p.add_argument("path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("vectors", help="write golden test vectors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("simulate", help="run a network simulation")
    p.add_argument("--config")
    p.add_argument("--scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep", type=int, default=1, help="run this many consecutive seeds")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"coopow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DecodeError, OSError, KeyError, ValueError) as exc:
        print(f"coopow: {exc}", file=out)
        return EXIT_FAIL


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
