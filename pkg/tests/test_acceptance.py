"""Exit criteria. Each test records a PASS/FAIL line shown in the terminal summary."""
import dataclasses
import io
import random
import time

from conftest import record_criterion
from coopow.blocks import ProofParams, extract_entries, decode_block, required_zero_bits, validate
from coopow.cli import main
from coopow.crypto import hash_bytes, leading_zero_bits
from coopow.ledger import ArrivalTrace, LedgerEngine, is_quiet, quiet_floor, record_arrival, replay
from coopow.miner import mine_basic
from coopow.blocks import Entry
from coopow.simnet import run, scenario_library
from oracles import naive_floor, oracle_violations
from test_ledger import as_rows, block_of_level, random_trace
from treebank import MUTATIONS, mutate


def check(name, passed, detail=""):
    record_criterion(name, passed, detail)
    assert passed, f"{name}: {detail}"


def test_1_threshold_rate():
    start = time.perf_counter()
    seed = b"threshold-rate"
    hits = sum(leading_zero_bits(hash_bytes(seed + i.to_bytes(8, "big"))) >= 8 for i in range(10**6))
    elapsed = time.perf_counter() - start
    # binomial(10^6, 2^-8): mean 3906.25, 5 sigma = 312
    ok = abs(hits - 3906.25) <= 312 and elapsed < 10
    check("1 threshold rate", ok, f"{hits} hits of 10^6, expected 3906.25 +- 312, {elapsed:.1f}s")


def test_2_doubling_law(kp):
    start = time.perf_counter()
    rng = random.Random(8)
    means = {}
    for z in (8, 9):
        params = ProofParams(z, 2)
        attempts = [mine_basic(Entry(b"doubling"), kp, params, rng.getrandbits(63)).attempts for _ in range(2000)]
        means[z] = sum(attempts) / len(attempts)
    ratio = means[9] / means[8]
    elapsed = time.perf_counter() - start
    check("2 doubling law", 1.8 <= ratio <= 2.2 and elapsed < 60,
          f"mean z=8 {means[8]:.1f}, z=9 {means[9]:.1f}, ratio {ratio:.3f}, {elapsed:.1f}s")


def test_3_cap_behaviour():
    mismatches = 0
    for z in range(256):
        params = ProofParams(z, 2)
        for level in range(301):
            mismatches += required_zero_bits(level, params) != min(z + level, 256)
    check("3 cap behaviour", mismatches == 0, f"{mismatches} mismatches over 256 x 301 grid")


def test_4_validation_oracle_equivalence(banks):
    start = time.perf_counter()
    rng = random.Random(4)
    trees = mutated = invalid = disagreements = 0
    for _ in range(1200):
        d = rng.choice((2, 3))
        bank = banks[d]
        b = rng.choice(bank[rng.randrange(4)])
        if rng.random() < 0.5:
            b = mutate(b, bank, rng, rng.choice(MUTATIONS))
            mutated += 1
        check_signatures = rng.random() < 0.5
        report = validate(b, ProofParams(1, d), check_signatures=check_signatures)
        got = {(v.path, v.kind) for v in report.violations}
        expected = oracle_violations(b, 1, d, check_signatures)
        disagreements += got != expected
        invalid += not report.ok
        trees += 1
    elapsed = time.perf_counter() - start
    check("4 validation oracle equivalence", disagreements == 0 and invalid > 200 and elapsed < 60,
          f"{trees} trees ({mutated} mutated, {invalid} invalid), {disagreements} disagreements, {elapsed:.1f}s")


def test_5_ledger_oracle_equivalence():
    rng = random.Random(5)
    mismatches = duplicates = 0
    for _ in range(1000):
        events = random_trace(rng, max_events=100, max_level=3)
        delta = rng.randrange(1, 150)
        engine = LedgerEngine(delta)
        for t, b in events:
            engine.receive(t, b)
        incremental = engine.flush()
        reference = replay(events, delta)
        mismatches += as_rows(incremental) != as_rows(reference)
        for ledger in (incremental, reference):
            ids = ledger.entry_ids()
            duplicates += len(ids) - len(set(ids))
    check("5 ledger oracle equivalence", mismatches == 0 and duplicates == 0,
          f"1000 traces, {mismatches} mismatches, {duplicates} duplicate entry ids")


def test_6_quiet_upward_closure():
    rng = random.Random(6)
    probes = violations = floor_mismatches = 0
    while probes < 10_000:
        delta = rng.randrange(1, 100)
        arrivals = sorted((rng.randrange(1, 500), rng.randrange(5)) for _ in range(rng.randrange(30)))
        trace = ArrivalTrace()
        for i, (t, lv) in enumerate(arrivals):
            record_arrival(trace, t, block_of_level(lv, b"q%d" % i), delta)
        for _ in range(50):
            t = rng.randrange(0, 600)
            n = rng.randrange(7)
            if is_quiet(trace, n, t, delta) and not is_quiet(trace, n + 1, t, delta):
                violations += 1
            floor_mismatches += quiet_floor(trace, t, delta) != naive_floor(arrivals, t, delta)
            probes += 1
    check("6 quiet upward closure", violations == 0 and floor_mismatches == 0,
          f"{probes} probes, {violations} closure violations, {floor_mismatches} floor mismatches")


def test_7_convergence():
    start = time.perf_counter()
    base = scenario_library()["converge-basic"]
    failures = []
    for seed in range(50):
        cfg = dataclasses.replace(base, seed=seed, num_peers=3 + seed % 3)
        report = run(cfg)
        drained = report.quiescent and cfg.duration_ticks >= report.last_mining_tick + cfg.delta_ticks + cfg.max_delay
        identical = len(set(report.canonical_ledgers)) == 1
        if not (identical and report.convergence and drained and report.entries_created >= 20):
            failures.append((seed, report.divergence, report.entries_created))
    elapsed = time.perf_counter() - start
    check("7 convergence", not failures and elapsed < 120,
          f"50 seeds, 3-5 peers, {len(failures)} failures {failures[:3]}, {elapsed:.1f}s")


def test_8_determinism(tmp_path):
    outputs = []
    for name in ("a", "b"):
        code = main(["simulate", "--scenario", "too-fast", "--seed", "17", "--out", str(tmp_path / name)],
                    out=io.StringIO())
        assert code == 0
        outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / name).iterdir())})
    check("8 determinism", outputs[0] == outputs[1] and len(outputs[0]) >= 3,
          f"{len(outputs[0])} report files compared byte for byte")


def test_9_end_to_end_cli(tmp_path):
    start = time.perf_counter()
    d, z = 2, 4
    out = io.StringIO()

    def cli(*argv):
        return main([str(a) for a in argv], out=out)

    payloads = [b"first entry", b"second entry"]
    for i, p in enumerate(payloads):
        (tmp_path / f"entry{i}.bin").write_bytes(p)
    # a pool of exactly d blocks has only d! orderings, so try key seeds until one proves
    for seed in range(200):
        key = tmp_path / f"key{seed}.json"
        assert cli("keygen", "--out", key, "--seed", seed) == 0
        pool = tmp_path / f"pool{seed}"
        pool.mkdir()
        for i in range(d):
            assert cli("mine-basic", "--key", key, "--payload-file", tmp_path / f"entry{i}.bin",
                       "--z", z, "--out", pool / f"b{i}.blk") == 0
        compound = tmp_path / f"c{seed}.blk"
        if cli("mine-compound", "--key", key, "--pool", pool, "--z", z, "--d", d, "--out", compound) == 0:
            break
    else:
        raise AssertionError("no key produced a proved compound")
    verify_out = io.StringIO()
    verified = main(["verify", str(compound), "--z", str(z), "--d", str(d), "--check-signatures"],
                    out=verify_out) == 0
    extract_out = io.StringIO()
    assert main(["extract", str(compound)], out=extract_out) == 0
    extracted = sorted(bytes.fromhex(line.split()[1]) for line in extract_out.getvalue().splitlines())
    block = decode_block(compound.read_bytes())
    elapsed = time.perf_counter() - start
    ok = (verified and verify_out.getvalue().startswith("ok") and extracted == sorted(payloads)
          and block.level == 1 and len(extract_entries(block)) == d and elapsed < 10)
    check("9 end-to-end CLI", ok, f"key seed {seed}, entries {extracted}, {elapsed:.1f}s")
