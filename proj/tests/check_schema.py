"""Run the tool on generated data and validate every JSON report against the schema."""

import json
import random
import subprocess
import sys
from pathlib import Path

import jsonschema


def write_sample(path, xi, n, seed):
    # Exponential bulk plus a GPD addend on half the points.
    rng = random.Random(seed)
    lines = ["value"]
    for _ in range(n):
        z = rng.expovariate(0.1)
        if rng.random() < 0.5:
            z += 10.0 * ((1.0 - rng.random()) ** -xi - 1.0) / xi
        lines.append(repr(z))
    path.write_text("\n".join(lines) + "\n")


def run(tool, args, expect):
    proc = subprocess.run([tool, *args], capture_output=True, text=True)
    if proc.returncode != expect:
        sys.exit(f"{' '.join(args)}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")
    return json.loads(proc.stdout)


def main():
    tool, schema_path, work = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    work.mkdir(parents=True, exist_ok=True)
    schema = json.loads(schema_path.read_text())
    validator = jsonschema.Draft202012Validator(schema)

    a, b = work / "a.txt", work / "b.txt"
    write_sample(a, 0.5, 5000, 1)
    write_sample(b, 0.8, 5000, 2)

    cases = [
        (["fit", str(a)], 0),
        (["fit", str(a), "--threshold", "20", "--method", "imh", "--draws", "200"], 0),
        (["fit", str(a), "--prior-xi", "9,9", "--prior-sigma", "1,0.1"], 0),
        (["ab", str(a), str(b)], 0),
        (["scan", str(a)], 0),
        (["scan", str(a), "--grid", "25"], 0),
        (["fit", str(a), "--threshold", "1e12"], 3),
        (["fit", str(work / "missing.txt")], 2),
        (["fit", str(a), "--bogus"], 4),
    ]
    failed = 0
    for args, expect in cases:
        report = run(tool, args, expect)
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        if errors:
            failed += 1
            print(f"FAIL {' '.join(args)}: {errors[0].message}")
        else:
            print(f"ok   {' '.join(args)}")

    # Mutations the schema must reject.
    good = run(tool, ["fit", str(a)], 0)
    for mutate in (
        lambda r: r.pop("mean_posterior"),
        lambda r: r["mean_posterior"].__setitem__("sd", -1.0),
        lambda r: r.__setitem__("extra", 1),
        lambda r: r["threshold"].__setitem__("mode", "guess"),
    ):
        bad = json.loads(json.dumps(good))
        mutate(bad)
        if validator.is_valid(bad):
            failed += 1
            print("FAIL schema accepted a malformed report")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
